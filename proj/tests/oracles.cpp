#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oracles {

Tensor random_tensor(Rng& rng, std::size_t rows, std::size_t cols, double lo,
                     double hi) {
  std::vector<double> data(rows * cols);
  for (double& d : data) d = rng.uniform(lo, hi);
  return Tensor::matrix(rows, cols, std::move(data));
}

Tensor random_unit_rows(Rng& rng, std::size_t rows, std::size_t cols) {
  Tensor t({rows, cols});
  for (std::size_t i = 0; i < rows; ++i) {
    double norm = 0.0;
    do {
      norm = 0.0;
      for (std::size_t j = 0; j < cols; ++j) {
        t.at(i, j) = rng.gaussian();
        norm += t.at(i, j) * t.at(i, j);
      }
      norm = std::sqrt(norm);
    } while (norm < 1e-6);
    for (std::size_t j = 0; j < cols; ++j) t.at(i, j) /= norm;
  }
  return t;
}

Tensor random_orthogonal(Rng& rng, std::size_t n) {
  // Gram-Schmidt on a Gaussian matrix; retry on near-dependence
  while (true) {
    Tensor q({n, n});
    for (std::size_t i = 0; i < n * n; ++i) q.data()[i] = rng.gaussian();
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      for (std::size_t k = 0; k < i; ++k) {
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += q.at(i, j) * q.at(k, j);
        for (std::size_t j = 0; j < n; ++j) q.at(i, j) -= dot * q.at(k, j);
      }
      double norm = 0.0;
      for (std::size_t j = 0; j < n; ++j) norm += q.at(i, j) * q.at(i, j);
      norm = std::sqrt(norm);
      if (norm < 1e-8) {
        ok = false;
        break;
      }
      for (std::size_t j = 0; j < n; ++j) q.at(i, j) /= norm;
    }
    if (ok) return q;
  }
}

std::vector<double> finite_difference(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& x, double h) {
  std::vector<double> grad(x.size());
  std::vector<double> probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double fp = f(probe);
    probe[i] = x[i] - h;
    const double fm = f(probe);
    probe[i] = x[i];
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

double max_rel_err(const std::vector<double>& a, const std::vector<double>& b,
                   double floor) {
  if (a.size() != b.size()) throw std::invalid_argument("max_rel_err: sizes");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::fabs(a[i]), std::fabs(b[i]), floor});
    worst = std::max(worst, std::fabs(a[i] - b[i]) / denom);
  }
  return worst;
}

std::vector<double> naive_power_spectrum(const std::vector<double>& frame,
                                         std::size_t nfft) {
  const std::size_t bins = nfft / 2 + 1;
  std::vector<double> out(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t n = 0; n < frame.size(); ++n) {
      const double ang = -2.0 * M_PI * static_cast<double>(k) *
                         static_cast<double>(n) / static_cast<double>(nfft);
      acc += frame[n] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = std::norm(acc);
  }
  return out;
}

std::vector<double> direct_convolve(const std::vector<double>& x,
                                    const std::vector<double>& h) {
  if (x.empty() || h.empty()) return {};
  std::vector<double> out(x.size() + h.size() - 1, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < h.size(); ++j) out[i + j] += x[i] * h[j];
  }
  return out;
}

double cosine(const std::vector<double>& u, const std::vector<double>& v) {
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  return dot / std::sqrt(nu * nv);
}

namespace {
std::vector<double> row_of(const Tensor& t, std::size_t i) {
  std::vector<double> r(t.cols());
  for (std::size_t j = 0; j < t.cols(); ++j) r[j] = t.at(i, j);
  return r;
}
}  // namespace

double brute_nt_xent_plain(const Tensor& z, const Tensor& zp, double tau) {
  const std::size_t n = z.rows();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double pos = std::exp(cosine(row_of(z, i), row_of(zp, i)) / tau);
    double denom = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      denom += std::exp(cosine(row_of(z, i), row_of(zp, a)) / tau);
    }
    total += -std::log(pos / denom);
  }
  return total / static_cast<double>(n);
}

double brute_nt_xent(const Tensor& z, const Tensor& zp, double tau, double m) {
  const std::size_t n = z.rows();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double pos =
        std::exp((cosine(row_of(z, i), row_of(zp, i)) - m) / tau);
    double denom = pos;
    for (std::size_t a = 0; a < n; ++a) {
      if (a == i) continue;
      denom += std::exp(cosine(row_of(z, i), row_of(zp, a)) / tau);
    }
    total += -std::log(pos / denom);
  }
  return total / static_cast<double>(n);
}

double brute_nt_xent_symmetric(const Tensor& z, const Tensor& zp, double tau,
                               double m) {
  const std::size_t n = z.rows();
  std::vector<std::vector<double>> all;
  for (std::size_t i = 0; i < n; ++i) all.push_back(row_of(z, i));
  for (std::size_t i = 0; i < n; ++i) all.push_back(row_of(zp, i));
  double total = 0.0;
  for (std::size_t i = 0; i < 2 * n; ++i) {
    const std::size_t partner = (i + n) % (2 * n);
    const double pos = std::exp((cosine(all[i], all[partner]) - m) / tau);
    double denom = pos;
    for (std::size_t a = 0; a < 2 * n; ++a) {
      if (a == i || a == partner) continue;
      denom += std::exp(cosine(all[i], all[a]) / tau);
    }
    total += -std::log(pos / denom);
  }
  return total / static_cast<double>(2 * n);
}

double brute_nt_xent_queue(const Tensor& z, const Tensor& zp, const Tensor& q,
                           double tau, double m) {
  const std::size_t n = z.rows();
  const std::size_t k = q.empty() ? 0 : q.rows();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double pos =
        std::exp((cosine(row_of(z, i), row_of(zp, i)) - m) / tau);
    double denom = pos;
    for (std::size_t b = 0; b < k; ++b) {
      denom += std::exp(cosine(row_of(z, i), row_of(q, b)) / tau);
    }
    total += -std::log(pos / denom);
  }
  return total / static_cast<double>(n);
}

double brute_nt_xent_scaled(const Tensor& z, const Tensor& zp, double scale,
                            double m) {
  const std::size_t n = z.rows();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double pos =
        std::exp(scale * cosine(row_of(z, i), row_of(zp, i)) - scale * m);
    double denom = pos;
    for (std::size_t a = 0; a < n; ++a) {
      if (a == i) continue;
      denom += std::exp(scale * cosine(row_of(z, i), row_of(zp, a)));
    }
    total += -std::log(pos / denom);
  }
  return total / static_cast<double>(n);
}

namespace {
struct OperatingPoint {
  double far;
  double frr;
};

// counts at threshold t: FAR = P(nontarget >= t), FRR = P(target < t)
OperatingPoint point_at(const std::vector<double>& scores,
                        const std::vector<bool>& targets, double t) {
  std::size_t fa = 0, fr = 0, n_tar = 0, n_non = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (targets[i]) {
      ++n_tar;
      if (scores[i] < t) ++fr;
    } else {
      ++n_non;
      if (scores[i] >= t) ++fa;
    }
  }
  return {static_cast<double>(fa) / static_cast<double>(n_non),
          static_cast<double>(fr) / static_cast<double>(n_tar)};
}

std::vector<double> threshold_set(const std::vector<double>& scores) {
  std::vector<double> t = scores;
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  t.push_back(std::numeric_limits<double>::infinity());
  t.insert(t.begin(), -std::numeric_limits<double>::infinity());
  return t;
}
}  // namespace

double sweep_eer(const std::vector<double>& scores,
                 const std::vector<bool>& targets) {
  const std::vector<double> thresholds = threshold_set(scores);
  std::vector<OperatingPoint> pts;
  for (double t : thresholds) pts.push_back(point_at(scores, targets, t));
  for (std::size_t k = 1; k < pts.size(); ++k) {
    const double d_prev = pts[k - 1].far - pts[k - 1].frr;
    const double d_cur = pts[k].far - pts[k].frr;
    if (d_cur <= 0.0) {
      if (d_cur == 0.0) return (pts[k].far + pts[k].frr) / 2.0;
      const double alpha = d_prev / (d_prev - d_cur);
      const double far_i = pts[k - 1].far + alpha * (pts[k].far - pts[k - 1].far);
      const double frr_i = pts[k - 1].frr + alpha * (pts[k].frr - pts[k - 1].frr);
      return (far_i + frr_i) / 2.0;
    }
  }
  return 1.0;  // unreachable for well-formed inputs
}

double sweep_min_dcf(const std::vector<double>& scores,
                     const std::vector<bool>& targets, double p_target,
                     double c_miss, double c_fa, bool normalize) {
  const std::vector<double> thresholds = threshold_set(scores);
  double best = std::numeric_limits<double>::infinity();
  for (double t : thresholds) {
    const OperatingPoint p = point_at(scores, targets, t);
    const double dcf =
        c_miss * p_target * p.frr + c_fa * (1.0 - p_target) * p.far;
    best = std::min(best, dcf);
  }
  if (normalize) {
    best /= std::min(c_miss * p_target, c_fa * (1.0 - p_target));
  }
  return best;
}

void FifoModel::enqueue(const std::vector<std::vector<double>>& batch) {
  for (const auto& r : batch) rows_.push_back(r);
  while (rows_.size() > capacity_) rows_.erase(rows_.begin());
}

}  // namespace oracles
