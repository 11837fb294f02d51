#pragma once

#include "error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lpdens {

constexpr double unbounded = std::numeric_limits<double>::infinity();

//! User-declared support. A missing bound defaults to the sample min/max;
//! use +/-`unbounded` for an infinite endpoint.
struct Support
{
  std::optional<double> lower;
  std::optional<double> upper;
};

//! Sorted, validated observations together with resolved support endpoints.
//! Immutable after construction.
class Sample
{
public:
  static Sample load(std::vector<double> raw, const Support& support = {});

  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double min() const { return values_.front(); }
  double max() const { return values_.back(); }
  double support_lower() const { return lower_; }
  double support_upper() const { return upper_; }
  bool bounded() const { return std::isfinite(lower_) && std::isfinite(upper_); }

  //! Number of observations <= t.
  std::size_t count_le(double t) const
  {
    return static_cast<std::size_t>(
      std::upper_bound(values_.begin(), values_.end(), t) - values_.begin());
  }

  //! Number of observations < t.
  std::size_t count_lt(double t) const
  {
    return static_cast<std::size_t>(
      std::lower_bound(values_.begin(), values_.end(), t) - values_.begin());
  }

  //! Empirical distribution function, right-continuous.
  double edf(double t) const
  {
    return static_cast<double>(count_le(t)) / static_cast<double>(size());
  }

  //! Length of the support when finite, otherwise of the data range.
  double range() const
  {
    return bounded() ? upper_ - lower_ : max() - min();
  }

  //! Sample standard deviation (n - 1 denominator).
  double sd() const;

private:
  Sample(std::vector<double> v, double lower, double upper)
    : values_(std::move(v))
    , lower_(lower)
    , upper_(upper)
  {}

  std::vector<double> values_;
  double lower_;
  double upper_;
};

inline Sample Sample::load(std::vector<double> raw, const Support& support)
{
  for (double x : raw) {
    if (!std::isfinite(x))
      throw Error(ErrorCode::non_finite, "sample contains NaN or Inf");
  }
  if (raw.size() < 2)
    throw Error(ErrorCode::too_few, "sample needs at least 2 observations");
  std::sort(raw.begin(), raw.end());

  double lower = support.lower.value_or(raw.front());
  double upper = support.upper.value_or(raw.back());
  if (std::isnan(lower) || std::isnan(upper) || !(lower < upper))
    throw Error(ErrorCode::support_violation,
                "support lower bound must be below upper bound");
  if (raw.front() < lower || raw.back() > upper)
    throw Error(ErrorCode::support_violation,
                "observation outside the declared support");
  return Sample(std::move(raw), lower, upper);
}

inline double Sample::sd() const
{
  double mean = 0.0;
  for (double x : values_)
    mean += x;
  mean /= static_cast<double>(size());
  double ss = 0.0;
  for (double x : values_)
    ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(size() - 1));
}

struct CutoffSplit
{
  Sample left;
  Sample right;
  std::size_t n_minus;
  std::size_t n_plus;
};

//! Splits at `cutoff`: left gets x < cutoff, right gets x >= cutoff.
inline CutoffSplit split_at_cutoff(const Sample& sample, double cutoff)
{
  auto v = sample.values();
  std::size_t n_minus = sample.count_lt(cutoff);
  std::size_t n_plus = sample.size() - n_minus;
  if (n_minus < 2 || n_plus < 2)
    throw Error(ErrorCode::empty_side,
                "each side of the cutoff needs at least 2 observations (got " +
                  std::to_string(n_minus) + " below, " +
                  std::to_string(n_plus) + " at or above)");
  std::vector<double> left(v.begin(), v.begin() + static_cast<long>(n_minus));
  std::vector<double> right(v.begin() + static_cast<long>(n_minus), v.end());
  return CutoffSplit{
    Sample::load(std::move(left), Support{ sample.support_lower(), cutoff }),
    Sample::load(std::move(right), Support{ cutoff, sample.support_upper() }),
    n_minus,
    n_plus
  };
}

namespace detail {

inline std::string_view trim(std::string_view s)
{
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' ||
                        s.back() == '\r' || s.back() == ','))
    s.remove_suffix(1);
  return s;
}

inline bool parse_double(std::string_view s, double& out)
{
  if (!s.empty() && s.front() == '+')
    s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

} // namespace detail

//! Reads a single numeric column. The first line may be a header; blank lines
//! are skipped; any other unparsable line is an error naming its line number.
inline std::vector<double> read_csv_column(std::istream& in)
{
  std::vector<double> out;
  std::string line;
  std::size_t lineno = 0;
  bool seen_content = false;
  while (std::getline(in, line)) {
    ++lineno;
    auto field = detail::trim(line);
    if (field.empty())
      continue;
    double value;
    if (detail::parse_double(field, value)) {
      out.push_back(value);
    } else if (!seen_content) {
      // header
    } else {
      throw Error(ErrorCode::parse_error,
                  "line " + std::to_string(lineno) + ": cannot parse '" +
                    std::string(field) + "' as a number");
    }
    seen_content = true;
  }
  return out;
}

inline std::vector<double> read_csv_file(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorCode::io_error, "cannot open " + path);
  return read_csv_column(in);
}

} // namespace lpdens
