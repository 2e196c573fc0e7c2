#include "submc/datasets.hpp"
#include "submc/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace submc
{

LogisticData generate_logistic(const Vector& beta, std::size_t n, Rng& rng)
{
  if(n == 0)
    throw Error(ErrorCode::invalid_config, "dataset size must be positive");
  if(beta.size() < 1)
    throw Error(ErrorCode::invalid_config, "logistic coefficients are empty");
  const Eigen::Index p = beta.size();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  LogisticData data;
  data.x.resize(static_cast<Eigen::Index>(n), p);
  data.y.resize(static_cast<Eigen::Index>(n));
  for(Eigen::Index i = 0; i < data.x.rows(); ++i)
  {
    data.x(i, 0) = 1.0;
    for(Eigen::Index j = 1; j < p; ++j)
      data.x(i, j) = normal(rng);
    const double prob = 1.0 / (1.0 + std::exp(-data.x.row(i).dot(beta)));
    data.y[i] = unif(rng) < prob ? 1.0 : 0.0;
  }
  return data;
}

Vector generate_ar1(const Vector& theta, ArParameterization param, std::size_t n, double nu,
                    Rng& rng)
{
  if(n < 2)
    throw Error(ErrorCode::invalid_config, "AR(1) series needs at least 2 values");
  if(theta.size() != 2)
    throw Error(ErrorCode::invalid_config, "AR(1) parameter has two entries");
  const double persistence = theta[1];
  const double mean = param == ArParameterization::standard
                        ? (std::abs(persistence) < 1.0 ? theta[0] / (1.0 - persistence) : theta[0])
                        : theta[0];
  std::student_t_distribution<double> noise(nu);

  Vector y(static_cast<Eigen::Index>(n));
  y[0] = mean;
  for(Eigen::Index t = 1; t < y.size(); ++t)
  {
    const double e = noise(rng);
    if(param == ArParameterization::standard)
      y[t] = theta[0] + persistence * y[t - 1] + e;
    else
      y[t] = theta[0] + persistence * (y[t - 1] - theta[0]) + e;
  }
  return y;
}

std::vector<SubjectPanel> generate_weibull(const Vector& theta, std::size_t subjects,
                                           std::size_t periods, Rng& rng)
{
  if(subjects == 0 || periods == 0)
    throw Error(ErrorCode::invalid_config, "survival data needs subjects and periods");
  if(theta.size() < 3 || theta.size() % 2 == 0)
    throw Error(ErrorCode::invalid_config, "Weibull parameter must have 2p + 1 entries");
  const Eigen::Index p = (theta.size() - 1) / 2;
  const auto beta_lambda = theta.head(p);
  const auto beta_rho = theta.segment(p, p);
  const double tau = std::exp(0.5 * theta[2 * p]);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<SubjectPanel> panels(subjects);
  for(std::size_t i = 0; i < subjects; ++i)
  {
    SubjectPanel& s = panels[i];
    s.id = i;
    s.x.resize(static_cast<Eigen::Index>(periods), p);
    const double gamma = tau * normal(rng);
    for(std::size_t j = 0; j < periods; ++j)
    {
      const auto r = static_cast<Eigen::Index>(j);
      s.x(r, 0) = 1.0;
      for(Eigen::Index c = 1; c < p; ++c)
        s.x(r, c) = normal(rng);
      const double t0 = static_cast<double>(j);
      const double t1 = t0 + 1.0;
      const double rho = std::exp(s.x.row(r).dot(beta_rho));
      const double lambda = std::exp(gamma + s.x.row(r).dot(beta_lambda));
      const double h = std::exp(-lambda * (std::pow(t1, rho) - std::pow(t0, rho)));
      s.t_start.push_back(t0);
      s.t_end.push_back(t1);
      s.y.push_back(unif(rng) < h ? 1.0 : 0.0);
      if(s.y.back() == 0.0)
      {
        // Observation ends at the event.
        s.x.conservativeResize(r + 1, p);
        break;
      }
    }
  }
  return panels;
}

Vector generate_normal(double mean, double sigma, std::size_t n, Rng& rng)
{
  if(n == 0)
    throw Error(ErrorCode::invalid_config, "dataset size must be positive");
  std::normal_distribution<double> normal(mean, sigma);
  Vector y(static_cast<Eigen::Index>(n));
  for(Eigen::Index i = 0; i < y.size(); ++i)
    y[i] = normal(rng);
  return y;
}

std::string format_double(double x)
{
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace
{

struct CsvReader
{
  std::filesystem::path path;
  std::ifstream in;
  std::size_t line_no = 0;
  std::vector<std::string> header;

  explicit CsvReader(const std::filesystem::path& p) : path(p), in(p)
  {
    if(!in)
      throw Error(ErrorCode::io, "cannot open " + p.string());
    std::string line;
    if(!std::getline(in, line))
      fail("missing header");
    ++line_no;
    header = split(line);
  }

  [[noreturn]] void fail(const std::string& what) const
  {
    throw Error(ErrorCode::io, path.string() + ":" + std::to_string(line_no) + ": " + what);
  }

  static std::vector<std::string> split(const std::string& line)
  {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while(std::getline(ss, field, ','))
    {
      if(!field.empty() && field.back() == '\r')
        field.pop_back();
      out.push_back(field);
    }
    if(!line.empty() && line.back() == ',')
      out.emplace_back();
    return out;
  }

  // Next non-empty row as numbers; false at end of file.
  bool next(std::vector<double>& row)
  {
    std::string line;
    while(std::getline(in, line))
    {
      ++line_no;
      if(line.empty() || line == "\r")
        continue;
      const auto fields = split(line);
      if(fields.size() != header.size())
        fail("expected " + std::to_string(header.size()) + " fields, found " +
             std::to_string(fields.size()));
      row.resize(fields.size());
      for(std::size_t i = 0; i < fields.size(); ++i)
      {
        const std::string& f = fields[i];
        auto res = std::from_chars(f.data(), f.data() + f.size(), row[i]);
        if(res.ec != std::errc() || res.ptr != f.data() + f.size() || !std::isfinite(row[i]))
          fail("field '" + header[i] + "' is not a finite number: '" + f + "'");
      }
      return true;
    }
    return false;
  }
};

std::string join_row(const std::vector<double>& values)
{
  std::string out;
  for(std::size_t i = 0; i < values.size(); ++i)
  {
    if(i > 0)
      out += ',';
    out += format_double(values[i]);
  }
  out += '\n';
  return out;
}

} // namespace

void write_logistic_csv(const std::filesystem::path& path, const LogisticData& data)
{
  std::string out = "y";
  for(Eigen::Index j = 0; j < data.x.cols(); ++j)
    out += ",x" + std::to_string(j);
  out += '\n';
  std::vector<double> row(static_cast<std::size_t>(data.x.cols()) + 1);
  for(Eigen::Index i = 0; i < data.x.rows(); ++i)
  {
    row[0] = data.y[i];
    for(Eigen::Index j = 0; j < data.x.cols(); ++j)
      row[static_cast<std::size_t>(j) + 1] = data.x(i, j);
    out += join_row(row);
  }
  write_file_atomic(path, out);
}

LogisticData read_logistic_csv(const std::filesystem::path& path)
{
  CsvReader csv(path);
  if(csv.header.size() < 2 || csv.header[0] != "y")
    csv.fail("logistic data needs columns y, x0, ...");
  std::vector<std::vector<double>> rows;
  std::vector<double> row;
  while(csv.next(row))
  {
    if(row[0] != 0.0 && row[0] != 1.0)
      csv.fail("response must be 0 or 1");
    rows.push_back(row);
  }
  if(rows.empty())
    throw Error(ErrorCode::io, path.string() + ": no data rows");

  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto p = static_cast<Eigen::Index>(csv.header.size() - 1);
  LogisticData data;
  data.y.resize(n);
  data.x.resize(n, p);
  for(Eigen::Index i = 0; i < n; ++i)
  {
    const auto& r = rows[static_cast<std::size_t>(i)];
    data.y[i] = r[0];
    for(Eigen::Index j = 0; j < p; ++j)
      data.x(i, j) = r[static_cast<std::size_t>(j) + 1];
  }
  return data;
}

void write_series_csv(const std::filesystem::path& path, const Vector& series)
{
  std::string out = "y\n";
  for(Eigen::Index i = 0; i < series.size(); ++i)
  {
    out += format_double(series[i]);
    out += '\n';
  }
  write_file_atomic(path, out);
}

Vector read_series_csv(const std::filesystem::path& path)
{
  CsvReader csv(path);
  if(csv.header.size() != 1)
    csv.fail("series data has a single column");
  std::vector<double> values;
  std::vector<double> row;
  while(csv.next(row))
    values.push_back(row[0]);
  if(values.empty())
    throw Error(ErrorCode::io, path.string() + ": no data rows");
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

void write_panels_csv(const std::filesystem::path& path, const std::vector<SubjectPanel>& panels)
{
  const Eigen::Index p = panels.empty() ? 0 : panels.front().x.cols();
  std::string out = "subject,period,t_start,t_end,y";
  for(Eigen::Index j = 0; j < p; ++j)
    out += ",x" + std::to_string(j);
  out += '\n';
  std::vector<double> row(5 + static_cast<std::size_t>(p));
  for(const auto& s : panels)
  {
    for(std::size_t j = 0; j < s.periods(); ++j)
    {
      row[0] = static_cast<double>(s.id);
      row[1] = static_cast<double>(j);
      row[2] = s.t_start[j];
      row[3] = s.t_end[j];
      row[4] = s.y[j];
      for(Eigen::Index c = 0; c < p; ++c)
        row[5 + static_cast<std::size_t>(c)] = s.x(static_cast<Eigen::Index>(j), c);
      out += join_row(row);
    }
  }
  write_file_atomic(path, out);
}

std::vector<SubjectPanel> read_panels_csv(const std::filesystem::path& path)
{
  CsvReader csv(path);
  if(csv.header.size() < 6 || csv.header[0] != "subject")
    csv.fail("panel data needs columns subject, period, t_start, t_end, y, x0, ...");
  const std::size_t p = csv.header.size() - 5;

  // Subjects keep the order of first appearance.
  std::vector<SubjectPanel> panels;
  std::map<long long, std::size_t> slot;
  std::vector<std::vector<std::vector<double>>> covariates;
  std::vector<double> row;
  while(csv.next(row))
  {
    const auto id = static_cast<long long>(row[0]);
    if(static_cast<double>(id) != row[0] || id < 0)
      csv.fail("subject id must be a non-negative integer");
    auto [it, inserted] = slot.try_emplace(id, panels.size());
    if(inserted)
    {
      panels.emplace_back();
      panels.back().id = static_cast<std::size_t>(id);
      covariates.emplace_back();
    }
    SubjectPanel& s = panels[it->second];
    if(!s.t_end.empty() && row[2] < s.t_end.back())
      csv.fail("subject " + std::to_string(id) + " has non-monotone period times");
    s.t_start.push_back(row[2]);
    s.t_end.push_back(row[3]);
    s.y.push_back(row[4]);
    covariates[it->second].emplace_back(row.begin() + 5, row.end());
  }
  if(panels.empty())
    throw Error(ErrorCode::io, path.string() + ": no data rows");

  for(std::size_t i = 0; i < panels.size(); ++i)
  {
    auto& s = panels[i];
    s.x.resize(static_cast<Eigen::Index>(covariates[i].size()), static_cast<Eigen::Index>(p));
    for(std::size_t j = 0; j < covariates[i].size(); ++j)
      for(std::size_t c = 0; c < p; ++c)
        s.x(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c)) = covariates[i][j][c];
    validate_panel(s);
  }
  return panels;
}

} // namespace submc
