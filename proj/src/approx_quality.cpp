#include "rmac/approx_quality.hpp"

#include <algorithm>
#include <cmath>

#include "rmac/errors.hpp"
#include "rmac/pooling.hpp"

namespace rmac {

namespace {

// Visits every rectangle with top row y0 and hands the callback the exact
// per-channel max and the generalized mean for each alpha (laid out
// [alpha][channel]). Column statistics grow row by row and the run across
// x1 only ever adds non-negative terms, so the power sums carry no
// cancellation, unlike a four-term integral lookup. O(W^2 H^2 K A).
template <typename Visit>
void sweep_top_row(const DenseTensor& t, std::span<const std::vector<double>> powers,
                   std::span<const double> alphas, int y0, Visit&& visit) {
  const std::size_t w = std::size_t(t.width);
  const std::size_t k = std::size_t(t.channels);
  const std::size_t na = alphas.size();
  std::vector<double> colmax(k * w, 0.0);
  std::vector<std::uint32_t> colnz(k * w, 0);
  std::vector<double> colsum(na * k * w, 0.0);
  std::vector<double> run(k);
  std::vector<std::uint32_t> runnz(k);
  std::vector<double> runsum(na * k);
  std::vector<double> approx(na * k);
  const std::size_t plane = std::size_t(t.height) * w;
  for (int y1 = y0; y1 < t.height; ++y1) {
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t x = 0; x < w; ++x) {
        const std::size_t src = c * plane + std::size_t(y1) * w + x;
        const double v = t.values[src];
        colmax[c * w + x] = std::max(colmax[c * w + x], v);
        colnz[c * w + x] += v > 0.0;
        for (std::size_t a = 0; a < na; ++a) colsum[(a * k + c) * w + x] += powers[a][src];
      }
    }
    for (std::size_t x0 = 0; x0 < w; ++x0) {
      std::fill(run.begin(), run.end(), 0.0);
      std::fill(runnz.begin(), runnz.end(), 0u);
      std::fill(runsum.begin(), runsum.end(), 0.0);
      for (std::size_t x1 = x0; x1 < w; ++x1) {
        for (std::size_t c = 0; c < k; ++c) {
          run[c] = std::max(run[c], colmax[c * w + x1]);
          runnz[c] += colnz[c * w + x1];
          for (std::size_t a = 0; a < na; ++a) {
            runsum[a * k + c] += colsum[(a * k + c) * w + x1];
            // a lone non-zero is its own generalized mean
            approx[a * k + c] = runnz[c] == 0   ? 0.0
                                : runnz[c] == 1 ? run[c]
                                                : std::pow(runsum[a * k + c], 1.0 / alphas[a]);
          }
        }
        visit(Region{int(x0), y0, int(x1), y1}, std::span<const double>(run),
              std::span<const double>(approx));
      }
    }
  }
}

std::vector<std::vector<double>> power_tables(const DenseTensor& t, std::span<const double> alphas) {
  std::vector<std::vector<double>> out;
  for (double a : alphas) {
    if (!(a >= 1.0)) throw InvalidInput("alpha must be >= 1");
    std::vector<double> p(t.values.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = t.values[i] > 0.0 ? std::pow(t.values[i], a) : 0.0;
    out.push_back(std::move(p));
  }
  return out;
}

struct ProfileAccumulator {
  // [alpha][size] -> (sum, count)
  std::vector<std::vector<double>> sum;
  std::vector<std::vector<std::uint64_t>> count;
  ProfileAccumulator(std::size_t alphas, std::size_t sizes)
      : sum(alphas, std::vector<double>(sizes, 0.0)),
        count(alphas, std::vector<std::uint64_t>(sizes, 0)) {}
};

void profile_one(const DenseTensor& exact, std::span<const std::vector<double>> powers,
                 std::span<const double> alphas, int y0, ProfileAccumulator& acc) {
  const std::size_t k = std::size_t(exact.channels);
  sweep_top_row(exact, powers, alphas, y0,
                [&](const Region& r, std::span<const double> fmax, std::span<const double> approx) {
                  const auto size = std::size_t(r.area());
                  for (std::size_t a = 0; a < alphas.size(); ++a) {
                    double err = 0.0;
                    for (std::size_t c = 0; c < k; ++c) err += std::abs(approx[a * k + c] - fmax[c]);
                    acc.sum[a][size] += err;
                    acc.count[a][size] += k;
                  }
                });
}

std::vector<ErrorProfileRow> profile_impl(std::span<const DenseTensor> exact,
                                          std::span<const double> alphas, Exec exec) {
  if (exact.empty()) throw InvalidInput("error profile needs at least one map");
  std::size_t max_size = 0;
  for (const auto& t : exact) max_size = std::max(max_size, std::size_t(t.width) * t.height);
  ProfileAccumulator total(alphas.size(), max_size + 1);

  for (std::size_t m = 0; m < exact.size(); ++m) {
    const int h = exact[m].height;
    const auto powers = power_tables(exact[m], alphas);
    // One accumulator per top row; merged in row order for thread-count
    // independent results.
    std::vector<ProfileAccumulator> rows(std::size_t(h), ProfileAccumulator(alphas.size(), max_size + 1));
    if (exec == Exec::serial) {
      for (int y0 = 0; y0 < h; ++y0) profile_one(exact[m], powers, alphas, y0, rows[std::size_t(y0)]);
    } else {
#pragma omp parallel for schedule(dynamic, 1)
      for (int y0 = 0; y0 < h; ++y0) profile_one(exact[m], powers, alphas, y0, rows[std::size_t(y0)]);
    }
    for (const auto& r : rows) {
      for (std::size_t a = 0; a < alphas.size(); ++a) {
        for (std::size_t s = 0; s <= max_size; ++s) {
          total.sum[a][s] += r.sum[a][s];
          total.count[a][s] += r.count[a][s];
        }
      }
    }
  }

  std::vector<ErrorProfileRow> out;
  for (std::size_t s = 1; s <= max_size; ++s) {
    for (std::size_t a = 0; a < alphas.size(); ++a) {
      if (total.count[a][s] == 0) continue;
      out.push_back({std::int64_t(s), alphas[a], total.sum[a][s] / double(total.count[a][s]),
                     total.count[a][s]});
    }
  }
  return out;
}

}  // namespace

std::vector<ErrorProfileRow> approximation_error_profile(std::span<const DenseTensor> maps,
                                                         std::span<const double> alphas, Exec exec) {
  return profile_impl(maps, alphas, exec);
}

std::vector<ErrorProfileRow> approximation_error_profile(std::span<const ActivationMap> maps,
                                                         std::span<const double> alphas, Exec exec) {
  std::vector<DenseTensor> exact;
  for (const auto& m : maps) exact.push_back(dequantize(m));
  return profile_impl(exact, alphas, exec);
}

void write_error_profile_csv(std::ostream& out, std::span<const ErrorProfileRow> rows) {
  out << "region_size,alpha,mean_abs_error\n";
  const auto flags = out.flags();
  const auto prec = out.precision(10);
  for (const auto& r : rows) out << r.region_size << ',' << r.alpha << ',' << r.mean_abs_error << '\n';
  out.precision(prec);
  out.flags(flags);
}

CosineStats approximation_cosine_stats(std::span<const DenseTensor> maps, double alpha, Exec exec) {
  if (maps.empty()) throw InvalidInput("cosine statistics need at least one map");
  struct Partial {
    double sum = 0.0;
    double min = 1.0;
    std::uint64_t n = 0;
  };
  CosineStats out;
  double sum = 0.0;
  for (const auto& t : maps) {
    const double alphas[] = {alpha};
    const auto powers = power_tables(t, alphas);
    std::vector<Partial> rows(static_cast<std::size_t>(t.height));
    auto work = [&](int y0) {
      Partial& p = rows[std::size_t(y0)];
      sweep_top_row(t, powers, alphas, y0,
                    [&](const Region&, std::span<const double> fmax, std::span<const double> approx) {
        if (l2_norm(fmax) == 0.0) return;
        const double c = cosine(fmax, approx);
        p.sum += c;
        p.min = std::min(p.min, c);
        ++p.n;
      });
    };
    if (exec == Exec::serial) {
      for (int y0 = 0; y0 < t.height; ++y0) work(y0);
    } else {
#pragma omp parallel for schedule(dynamic, 1)
      for (int y0 = 0; y0 < t.height; ++y0) work(y0);
    }
    for (const auto& p : rows) {
      sum += p.sum;
      out.min = std::min(out.min, p.min);
      out.regions += p.n;
    }
  }
  out.mean = out.regions ? sum / double(out.regions) : 0.0;
  return out;
}

}  // namespace rmac
