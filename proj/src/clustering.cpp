#include "submc/clustering.hpp"
#include "submc/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

namespace submc
{

Standardizer Standardizer::fit(const DataMatrix& data)
{
  if(data.rows() == 0)
    throw Error(ErrorCode::empty_population, "cannot standardize empty data");
  Standardizer s;
  s.mean = data.colwise().mean().transpose();
  s.scale.resize(data.cols());
  for(Eigen::Index j = 0; j < data.cols(); ++j)
  {
    const double var = (data.col(j).array() - s.mean[j]).square().mean();
    s.scale[j] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  return s;
}

DataMatrix Standardizer::apply(const DataMatrix& data) const
{
  DataMatrix out = data;
  out.rowwise() -= mean.transpose();
  out.array().rowwise() /= scale.transpose().array();
  return out;
}

Vector Standardizer::apply(const Vector& z) const
{
  return ((z - mean).array() / scale.array()).matrix();
}

std::vector<std::vector<std::size_t>> ClusterSet::members() const
{
  std::vector<std::vector<std::size_t>> out(clusters());
  for(std::size_t j = 0; j < out.size(); ++j)
    out[j].reserve(counts[j]);
  for(std::size_t k = 0; k < assignments.size(); ++k)
    out[assignments[k]].push_back(k);
  return out;
}

ClusterSet cluster_epsilon_ball(const DataMatrix& z, double epsilon)
{
  if(!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw Error(ErrorCode::invalid_config, "epsilon must be positive and finite");
  const auto n = static_cast<std::size_t>(z.rows());
  if(n == 0)
    throw Error(ErrorCode::empty_population, "cannot cluster an empty dataset");

  // Unclustered points as a doubly linked list sorted by the first
  // coordinate, so each ball query only visits a slab of width 2 epsilon.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&z](std::size_t a, std::size_t b) { return z(a, 0) < z(b, 0); });
  std::vector<std::size_t> rank(n);
  for(std::size_t r = 0; r < n; ++r)
    rank[order[r]] = r;
  const std::size_t none = n;
  std::vector<std::size_t> prev(n), next(n);
  for(std::size_t r = 0; r < n; ++r)
  {
    prev[r] = r == 0 ? none : r - 1;
    next[r] = r + 1;
  }
  auto unlink = [&](std::size_t r)
  {
    if(prev[r] != none)
      next[prev[r]] = next[r];
    if(next[r] != none)
      prev[next[r]] = prev[r];
  };

  ClusterSet out;
  out.epsilon = epsilon;
  out.assignments.assign(n, none);
  const double eps2 = epsilon * epsilon;
  std::vector<std::size_t> ball;
  std::vector<Vector> centroid_list;

  for(std::size_t i = 0; i < n; ++i)
  {
    if(out.assignments[i] != none)
      continue;
    const std::size_t j = out.seeds.size();
    const double x0 = z(i, 0);
    ball.clear();

    const std::size_t ri = rank[i];
    for(std::size_t r = prev[ri]; r != none; r = prev[r])
    {
      const std::size_t k = order[r];
      if(x0 - z(k, 0) > epsilon)
        break;
      if((z.row(k) - z.row(i)).squaredNorm() <= eps2)
        ball.push_back(r);
    }
    ball.push_back(ri);
    for(std::size_t r = next[ri]; r != none; r = next[r])
    {
      const std::size_t k = order[r];
      if(z(k, 0) - x0 > epsilon)
        break;
      if((z.row(k) - z.row(i)).squaredNorm() <= eps2)
        ball.push_back(r);
    }

    Vector centroid = Vector::Zero(z.cols());
    for(std::size_t r : ball)
    {
      const std::size_t k = order[r];
      out.assignments[k] = j;
      centroid += z.row(k).transpose();
      out.max_seed_distance = std::max(out.max_seed_distance, (z.row(k) - z.row(i)).norm());
      unlink(r);
    }
    centroid /= static_cast<double>(ball.size());
    out.seeds.push_back(i);
    out.counts.push_back(ball.size());
    centroid_list.push_back(std::move(centroid));
  }

  out.centroids.resize(static_cast<Eigen::Index>(centroid_list.size()), z.cols());
  for(std::size_t j = 0; j < centroid_list.size(); ++j)
    out.centroids.row(static_cast<Eigen::Index>(j)) = centroid_list[j].transpose();
  for(std::size_t k = 0; k < n; ++k)
  {
    const double d =
      (z.row(static_cast<Eigen::Index>(k)) - out.centroids.row(static_cast<Eigen::Index>(out.assignments[k]))).norm();
    out.max_centroid_distance = std::max(out.max_centroid_distance, d);
  }
  return out;
}

std::vector<CentroidSummary> precompute_centroid_statistics(const DataMatrix& points,
                                                            const ClusterSet& clusters)
{
  if(static_cast<std::size_t>(points.rows()) != clusters.points())
    throw Error(ErrorCode::invalid_params, "points and clustering differ in size");
  const Eigen::Index d = points.cols();
  std::vector<CentroidSummary> out(clusters.clusters());
  for(std::size_t j = 0; j < out.size(); ++j)
  {
    out[j].centroid = Vector::Zero(d);
    out[j].count = clusters.counts[j];
    out[j].deviation_sum = Vector::Zero(d);
    out[j].deviation_outer_sum = Matrix::Zero(d, d);
  }
  for(std::size_t k = 0; k < clusters.points(); ++k)
    out[clusters.assignments[k]].centroid += points.row(static_cast<Eigen::Index>(k)).transpose();
  for(auto& s : out)
    s.centroid /= static_cast<double>(s.count);
  for(std::size_t k = 0; k < clusters.points(); ++k)
  {
    auto& s = out[clusters.assignments[k]];
    const Vector b = points.row(static_cast<Eigen::Index>(k)).transpose() - s.centroid;
    s.deviation_sum += b;
    s.deviation_outer_sum.noalias() += b * b.transpose();
  }
  return out;
}

double taylor_proxy(const Vector& z, const CentroidSummary& summary,
                    const DataDerivatives& at_centroid)
{
  const Vector b = z - summary.centroid;
  return at_centroid.value + at_centroid.gradient.dot(b) + 0.5 * b.dot(at_centroid.hessian * b);
}

std::pair<double, std::size_t> proxy_total(const Vector& theta, const Model& model,
                                           std::vector<CentroidSummary>& summaries,
                                           const std::vector<Matrix>* fixed_hessians,
                                           std::vector<DataDerivatives>* derivatives)
{
  if(fixed_hessians && fixed_hessians->size() != summaries.size())
    throw Error(ErrorCode::invalid_params, "one fixed Hessian per cluster is required");
  if(derivatives)
    derivatives->resize(summaries.size());
  double total = 0.0;
  for(std::size_t j = 0; j < summaries.size(); ++j)
  {
    auto& s = summaries[j];
    DataDerivatives d = model.data_derivatives(theta, s.centroid);
    if(fixed_hessians)
      d.hessian = (*fixed_hessians)[j];
    s.loglik_at_centroid = d.value;
    total += static_cast<double>(s.count) * d.value + d.gradient.dot(s.deviation_sum) +
             0.5 * d.hessian.cwiseProduct(s.deviation_outer_sum).sum();
    if(derivatives)
      (*derivatives)[j] = std::move(d);
  }
  return {total, summaries.size()};
}

// ---------------------------------------------------------------------------
// Sidecar file

namespace
{

constexpr char magic[8] = {'S', 'U', 'B', 'M', 'C', 'C', 'L', '1'};

template <typename T>
void put(std::string& out, const T& value)
{
  out.append(reinterpret_cast<const char*>(&value), sizeof(T));
}

void put_doubles(std::string& out, const double* data, std::size_t count)
{
  out.append(reinterpret_cast<const char*>(data), count * sizeof(double));
}

struct Cursor
{
  const std::string& buf;
  std::size_t pos = 0;

  template <typename T>
  T get()
  {
    if(pos + sizeof(T) > buf.size())
      throw Error(ErrorCode::io, "clustering sidecar is truncated");
    T value;
    std::memcpy(&value, buf.data() + pos, sizeof(T));
    pos += sizeof(T);
    return value;
  }

  void get_doubles(double* data, std::size_t count)
  {
    if(pos + count * sizeof(double) > buf.size())
      throw Error(ErrorCode::io, "clustering sidecar is truncated");
    std::memcpy(data, buf.data() + pos, count * sizeof(double));
    pos += count * sizeof(double);
  }
};

} // namespace

std::uint64_t clustering_key(const DataMatrix& points, double epsilon)
{
  std::uint64_t h = fnv1a(std::as_bytes(std::span<const double>(points.data(),
                                                                 static_cast<std::size_t>(points.size()))));
  const std::uint64_t shape[2] = {static_cast<std::uint64_t>(points.rows()),
                                  static_cast<std::uint64_t>(points.cols())};
  h = fnv1a(std::as_bytes(std::span<const std::uint64_t>(shape)), h);
  return fnv1a(std::as_bytes(std::span<const double>(&epsilon, 1)), h);
}

void save_clustering(const std::filesystem::path& path, std::uint64_t key,
                     const ClusterSet& clusters, const std::vector<CentroidSummary>& summaries)
{
  std::string out(magic, sizeof magic);
  const std::uint64_t n = clusters.points();
  const std::uint64_t c = clusters.clusters();
  const std::uint64_t zd = static_cast<std::uint64_t>(clusters.centroids.cols());
  const std::uint64_t d = summaries.empty() ? 0 : static_cast<std::uint64_t>(summaries[0].centroid.size());
  put(out, key);
  put(out, clusters.epsilon);
  put(out, n);
  put(out, c);
  put(out, zd);
  put(out, d);
  put(out, clusters.max_seed_distance);
  put(out, clusters.max_centroid_distance);
  for(auto a : clusters.assignments)
    put(out, static_cast<std::uint64_t>(a));
  for(auto s : clusters.seeds)
    put(out, static_cast<std::uint64_t>(s));
  put_doubles(out, clusters.centroids.data(), static_cast<std::size_t>(clusters.centroids.size()));
  for(const auto& s : summaries)
  {
    put_doubles(out, s.centroid.data(), d);
    put_doubles(out, s.deviation_sum.data(), d);
    put_doubles(out, s.deviation_outer_sum.data(), d * d);
  }
  write_file_atomic(path, out);
}

std::optional<std::pair<ClusterSet, std::vector<CentroidSummary>>>
load_clustering(const std::filesystem::path& path, std::uint64_t key)
{
  if(!std::filesystem::exists(path))
    return std::nullopt;
  const std::string buf = read_file(path);
  if(buf.size() < sizeof magic || std::memcmp(buf.data(), magic, sizeof magic) != 0)
    throw Error(ErrorCode::io, path.string() + " is not a clustering sidecar");
  Cursor cur{buf, sizeof magic};
  if(cur.get<std::uint64_t>() != key)
    return std::nullopt;

  ClusterSet cs;
  cs.epsilon = cur.get<double>();
  const auto n = cur.get<std::uint64_t>();
  const auto c = cur.get<std::uint64_t>();
  const auto zd = cur.get<std::uint64_t>();
  const auto d = cur.get<std::uint64_t>();
  cs.max_seed_distance = cur.get<double>();
  cs.max_centroid_distance = cur.get<double>();
  cs.assignments.resize(n);
  cs.counts.assign(c, 0);
  for(auto& a : cs.assignments)
  {
    a = cur.get<std::uint64_t>();
    if(a >= c)
      throw Error(ErrorCode::io, "clustering sidecar has an invalid assignment");
    ++cs.counts[a];
  }
  cs.seeds.resize(c);
  for(auto& s : cs.seeds)
    s = cur.get<std::uint64_t>();
  cs.centroids.resize(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(zd));
  cur.get_doubles(cs.centroids.data(), c * zd);

  std::vector<CentroidSummary> summaries(c);
  for(std::size_t j = 0; j < c; ++j)
  {
    auto& s = summaries[j];
    s.count = cs.counts[j];
    s.centroid.resize(static_cast<Eigen::Index>(d));
    s.deviation_sum.resize(static_cast<Eigen::Index>(d));
    s.deviation_outer_sum.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    cur.get_doubles(s.centroid.data(), d);
    cur.get_doubles(s.deviation_sum.data(), d);
    cur.get_doubles(s.deviation_outer_sum.data(), d * d);
  }
  return std::make_pair(std::move(cs), std::move(summaries));
}

} // namespace submc
