#include "ramdp/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace ramdp {

namespace {

std::vector<double> gather(const Eigen::Ref<const Vector>& v, std::span<const int> idx) {
    std::vector<double> u;
    u.reserve(idx.size());
    for (int i : idx) u.push_back(v(i));
    return u;
}

double lq_distance(const std::vector<double>& u, double w, double q) {
    double acc = 0.0;
    for (double x : u) acc += std::pow(std::abs(x - w), q);
    return std::pow(acc, 1.0 / q);
}

/// Minimiser of w -> ||u - w 1||_q for general q in (1, inf).
double general_center(const std::vector<double>& u, double q) {
    const auto [lo_it, hi_it] = std::minmax_element(u.begin(), u.end());
    double lo = *lo_it, hi = *hi_it;
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - invphi * (hi - lo);
    double x2 = lo + invphi * (hi - lo);
    double f1 = lq_distance(u, x1, q);
    double f2 = lq_distance(u, x2, q);
    while (hi - lo > 1e-10 * std::max(1.0, std::abs(lo) + std::abs(hi))) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - invphi * (hi - lo);
            f1 = lq_distance(u, x1, q);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + invphi * (hi - lo);
            f2 = lq_distance(u, x2, q);
        }
    }
    return 0.5 * (lo + hi);
}

double kappa_of(std::vector<double> u, double q) {
    if (u.size() <= 1) return 0.0;
    if (q == 1.0) {
        const auto mid = u.begin() + std::ptrdiff_t(u.size() / 2);
        std::nth_element(u.begin(), mid, u.end());
        const double median = *mid;
        double acc = 0.0;
        for (double x : u) acc += std::abs(x - median);
        return acc;
    }
    if (q == 2.0) {
        const double mean = std::accumulate(u.begin(), u.end(), 0.0) / double(u.size());
        double acc = 0.0;
        for (double x : u) acc += (x - mean) * (x - mean);
        return std::sqrt(acc);
    }
    if (std::isinf(q)) {
        const auto [lo, hi] = std::minmax_element(u.begin(), u.end());
        return 0.5 * (*hi - *lo);
    }
    return lq_distance(u, general_center(u, q), q);
}

double lp_norm(const Vector& x, double p) {
    if (std::isinf(p)) return x.cwiseAbs().maxCoeff();
    if (p == 1.0) return x.cwiseAbs().sum();
    if (p == 2.0) return x.norm();
    return std::pow(x.cwiseAbs().array().pow(p).sum(), 1.0 / p);
}

void check_radius(const TabularMdp& mdp, const QTable& radius) {
    if (radius.rows() != mdp.num_states() || radius.cols() != mdp.num_actions())
        throw UsageError("radius table must be S x A");
    if (!radius.allFinite() || (radius.array() < 0.0).any())
        throw UsageError("radii must be finite and nonnegative");
}

}  // namespace

double conjugate_exponent(double p) {
    if (!(p >= 1.0)) throw UsageError("norm order p must be >= 1");
    if (p == 1.0) return kInfNorm;
    if (std::isinf(p)) return 1.0;
    return p / (p - 1.0);
}

UncertaintyModel UncertaintyModel::contamination(const TabularMdp& mdp, const QTable& radius) {
    check_radius(mdp, radius);
    if ((radius.array() > 1.0).any()) throw UsageError("contamination radius must be <= 1");
    UncertaintyModel m;
    m.kind_ = SetKind::Contamination;
    m.num_states_ = mdp.num_states();
    m.num_actions_ = mdp.num_actions();
    m.nominal_ = mdp.nominal();
    m.radius_ = radius;
    m.mode_ = ForbiddenMode::None;
    std::vector<int> all(static_cast<std::size_t>(m.num_states_));
    std::iota(all.begin(), all.end(), 0);
    m.support_.assign(std::size_t(m.nominal_.rows()), all);
    m.exact_.assign(std::size_t(m.nominal_.rows()), 1);
    return m;
}

UncertaintyModel UncertaintyModel::contamination(const TabularMdp& mdp, double radius) {
    return contamination(mdp, QTable::Constant(mdp.num_states(), mdp.num_actions(), radius));
}

UncertaintyModel UncertaintyModel::lp_ball(const TabularMdp& mdp, double p, const QTable& radius,
                                           ForbiddenMode mode) {
    if (mode == ForbiddenMode::Explicit)
        throw UsageError("explicit forbidden sets need the overload taking the sets");
    check_radius(mdp, radius);
    UncertaintyModel m;
    m.kind_ = SetKind::LpBall;
    m.p_ = p;
    m.q_ = conjugate_exponent(p);
    m.mode_ = mode;
    m.num_states_ = mdp.num_states();
    m.num_actions_ = mdp.num_actions();
    m.nominal_ = mdp.nominal();
    m.radius_ = radius;
    m.finish_lp(nullptr);
    return m;
}

UncertaintyModel UncertaintyModel::lp_ball(const TabularMdp& mdp, double p, double radius,
                                           ForbiddenMode mode) {
    return lp_ball(mdp, p, QTable::Constant(mdp.num_states(), mdp.num_actions(), radius), mode);
}

UncertaintyModel UncertaintyModel::lp_ball(const TabularMdp& mdp, double p, const QTable& radius,
                                           const std::vector<std::vector<int>>& forbidden) {
    check_radius(mdp, radius);
    if (forbidden.size() != std::size_t(mdp.nominal().rows()))
        throw UsageError("need one forbidden set per (s,a)");
    UncertaintyModel m;
    m.kind_ = SetKind::LpBall;
    m.p_ = p;
    m.q_ = conjugate_exponent(p);
    m.mode_ = ForbiddenMode::Explicit;
    m.num_states_ = mdp.num_states();
    m.num_actions_ = mdp.num_actions();
    m.nominal_ = mdp.nominal();
    m.radius_ = radius;
    m.finish_lp(&forbidden);
    return m;
}

void UncertaintyModel::finish_lp(const std::vector<std::vector<int>>* explicit_forbidden) {
    const auto rows = std::size_t(nominal_.rows());
    support_.assign(rows, {});
    exact_.assign(rows, 1);
    for (std::size_t i = 0; i < rows; ++i) {
        std::vector<char> banned(std::size_t(num_states_), 0);
        if (mode_ == ForbiddenMode::Auto) {
            for (int t = 0; t < num_states_; ++t) banned[std::size_t(t)] = nominal_(Eigen::Index(i), t) == 0.0;
        } else if (mode_ == ForbiddenMode::Explicit) {
            for (int t : (*explicit_forbidden)[i]) {
                if (t < 0 || t >= num_states_) throw UsageError("forbidden state out of range");
                if (nominal_(Eigen::Index(i), t) != 0.0)
                    throw UsageError("forbidden state has positive nominal probability");
                banned[std::size_t(t)] = 1;
            }
        }
        double min_prob = 1.0;
        for (int t = 0; t < num_states_; ++t) {
            if (banned[std::size_t(t)]) continue;
            support_[i].push_back(t);
            min_prob = std::min(min_prob, nominal_(Eigen::Index(i), t));
        }
        const double R = radius_(Eigen::Index(i) / num_actions_, Eigen::Index(i) % num_actions_);
        exact_[i] = min_prob >= R;
    }
}

bool UncertaintyModel::all_exact() const { return count_inexact() == 0; }

int UncertaintyModel::count_inexact() const {
    return int(std::count(exact_.begin(), exact_.end(), char(0)));
}

double kappa(const Eigen::Ref<const Vector>& v, double q, std::span<const int> support) {
    return kappa_of(gather(v, support), q);
}

double kappa(const Eigen::Ref<const Vector>& v, double q) {
    return kappa_of(std::vector<double>(v.data(), v.data() + v.size()), q);
}

TaggedSupport support_tagged(const UncertaintyModel& model, int s, int a,
                             const Eigen::Ref<const Vector>& v) {
    const auto row = model.nominal_row(s, a);
    const double nominal = row.dot(v);
    const double R = model.radius(s, a);
    if (model.kind() == SetKind::Contamination)
        return {(1.0 - R) * nominal + R * v.minCoeff(), true};
    if (R == 0.0) return {nominal, true};
    return {nominal - R * kappa(v, model.q(), model.effective_support(s, a)), model.is_exact(s, a)};
}

double support(const UncertaintyModel& model, int s, int a, const Eigen::Ref<const Vector>& v) {
    return support_tagged(model, s, a, v).value;
}

Vector worst_case_kernel_row(const UncertaintyModel& model, int s, int a,
                             const Eigen::Ref<const Vector>& v) {
    Vector row = model.nominal_row(s, a).transpose();
    const double R = model.radius(s, a);
    if (model.kind() == SetKind::Contamination) {
        Eigen::Index argmin = 0;
        v.minCoeff(&argmin);  // first minimiser
        row *= (1.0 - R);
        row(argmin) += R;
        return row;
    }
    if (!model.is_exact(s, a))
        throw DegeneracyError("worst-case row requested where the radius exceeds the small-radius bound");
    const auto idx = model.effective_support(s, a);
    const auto n = idx.size();
    if (R == 0.0 || n <= 1) return row;

    const std::vector<double> u = gather(v, idx);
    Vector delta = Vector::Zero(Eigen::Index(n));
    const double q = model.q();
    if (std::isinf(q)) {
        // p = 1: move R/2 from the highest value to the lowest.
        const auto lo = std::min_element(u.begin(), u.end()) - u.begin();
        const auto hi = std::max_element(u.begin(), u.end()) - u.begin();
        if (u[std::size_t(hi)] > u[std::size_t(lo)]) {
            delta(lo) = 0.5 * R;
            delta(hi) = -0.5 * R;
        }
    } else if (q == 1.0) {
        // p = inf: +R on the lower half, -R on the upper half, median untouched.
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t i, std::size_t j) { return u[i] < u[j]; });
        for (std::size_t k = 0; k < n / 2; ++k) {
            delta(Eigen::Index(order[k])) = R;
            delta(Eigen::Index(order[n - 1 - k])) = -R;
        }
    } else {
        const double center = q == 2.0 ? std::accumulate(u.begin(), u.end(), 0.0) / double(n)
                                       : general_center(u, q);
        for (std::size_t k = 0; k < n; ++k) {
            const double w = u[k] - center;
            delta(Eigen::Index(k)) = -std::copysign(std::pow(std::abs(w), q - 1.0), w);
        }
        delta.array() -= delta.mean();
        const double norm = lp_norm(delta, model.p());
        if (norm > 0.0)
            delta *= R / norm;
        else
            delta.setZero();
    }
    for (std::size_t k = 0; k < n; ++k) row(idx[k]) += delta(Eigen::Index(k));
    return row;
}

bool row_in_set(const UncertaintyModel& model, int s, int a, const Eigen::Ref<const Vector>& row,
                double tol) {
    if (row.size() != model.num_states()) return false;
    if ((row.array() < -tol).any() || std::abs(row.sum() - 1.0) > tol) return false;
    const Vector nominal = model.nominal_row(s, a).transpose();
    const double R = model.radius(s, a);
    if (model.kind() == SetKind::Contamination)
        return ((row - (1.0 - R) * nominal).array() >= -tol).all();
    std::vector<char> allowed(std::size_t(model.num_states()), 0);
    for (int t : model.effective_support(s, a)) allowed[std::size_t(t)] = 1;
    for (int t = 0; t < model.num_states(); ++t)
        if (!allowed[std::size_t(t)] && std::abs(row(t)) > tol) return false;
    return lp_norm(row - nominal, model.p()) <= R + tol;
}

Vector random_feasible_row(const UncertaintyModel& model, int s, int a, std::mt19937_64& rng) {
    Vector row = model.nominal_row(s, a).transpose();
    const double R = model.radius(s, a);
    if (R == 0.0) return row;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    if (model.kind() == SetKind::Contamination) {
        std::exponential_distribution<double> expo(1.0);
        Vector q(model.num_states());
        for (Eigen::Index i = 0; i < q.size(); ++i) q(i) = expo(rng);
        q /= q.sum();
        return (1.0 - R) * row + R * q;
    }
    const auto idx = model.effective_support(s, a);
    const auto n = Eigen::Index(idx.size());
    if (n <= 1) return row;
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vector delta(n);
    for (Eigen::Index k = 0; k < n; ++k) delta(k) = gauss(rng);
    delta.array() -= delta.mean();
    const double norm = lp_norm(delta, model.p());
    if (norm == 0.0) return row;
    // Half the draws sit on the sphere, where the extreme kernels live.
    const double scale = unif(rng) < 0.5 ? 1.0 : unif(rng);
    delta *= scale * R / norm;
    double shrink = 1.0;
    for (Eigen::Index k = 0; k < n; ++k) {
        const double base = row(idx[std::size_t(k)]);
        if (base + delta(k) < 0.0) shrink = std::min(shrink, base / -delta(k));
    }
    for (Eigen::Index k = 0; k < n; ++k) row(idx[std::size_t(k)]) += shrink * delta(k);
    return row;
}

double support_oracle(const UncertaintyModel& model, int s, int a, const Eigen::Ref<const Vector>& v) {
    const Vector nominal = model.nominal_row(s, a).transpose();
    const double R = model.radius(s, a);
    const double base = nominal.dot(v);

    if (model.kind() == SetKind::Contamination) {
        if (model.num_states() > 6) throw UsageError("support_oracle supports at most 6 states");
        // Linear objective over the image of the simplex: some vertex q = e_j is optimal.
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < v.size(); ++j) {
            Vector q = Vector::Zero(v.size());
            q(j) = 1.0;
            best = std::min(best, ((1.0 - R) * nominal + R * q).dot(v));
        }
        return best;
    }

    const auto idx = model.effective_support(s, a);
    const int n = int(idx.size());
    if (n > 6) throw UsageError("support_oracle supports at most 6 effective states");
    if (R == 0.0 || n <= 1) return base;

    // Free coordinates: the first n-1 support states; the last absorbs -sum.
    const int dim = n - 1;
    Vector p0(n), c(dim), lower(dim), upper(dim);
    for (int k = 0; k < n; ++k) p0(k) = nominal(idx[std::size_t(k)]);
    const double v_last = v(idx[std::size_t(n - 1)]);
    for (int k = 0; k < dim; ++k) {
        c(k) = v(idx[std::size_t(k)]) - v_last;
        lower(k) = std::max(-R, -p0(k));
        upper(k) = std::min(R, 1.0 - p0(k));
    }
    const double p = model.p();
    auto full = [&](const Vector& x) {
        Vector d(n);
        d.head(dim) = x;
        d(dim) = -x.sum();
        return d;
    };
    auto feasible = [&](const Vector& x) {
        const Vector d = full(x);
        if (((p0 + d).array() < -1e-15).any()) return false;
        return lp_norm(d, p) <= R * (1.0 + 1e-12);
    };
    auto objective = [&](const Vector& x) { return c.dot(x); };

    // Coarse grid over the bounding box.
    const double budget = 2.0e5;
    const int per_dim = std::max(3, int(std::floor(std::pow(budget, 1.0 / dim))));
    Vector best_x = Vector::Zero(dim);
    double best_f = 0.0;
    std::vector<int> counter(std::size_t(dim), 0);
    Vector x(dim);
    while (true) {
        for (int k = 0; k < dim; ++k)
            x(k) = lower(k) + (upper(k) - lower(k)) * counter[std::size_t(k)] / (per_dim - 1);
        if (feasible(x)) {
            const double f = objective(x);
            if (f < best_f) {
                best_f = f;
                best_x = x;
            }
        }
        int k = 0;
        while (k < dim && ++counter[std::size_t(k)] == per_dim) counter[std::size_t(k++)] = 0;
        if (k == dim) break;
    }

    // Local refinement: projected descent steps (radial pull-back into the set)
    // and random feasible probes with a shrinking step.
    std::mt19937_64 rng(0x5eedULL);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto pull_back = [&](const Vector& trial) {
        if (feasible(trial)) return trial;
        double lo = 0.0, hi = 1.0;  // 0 is feasible by construction
        for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lo + hi);
            (feasible(Vector(mid * trial)) ? lo : hi) = mid;
        }
        return Vector(lo * trial);
    };
    double step = 2.0 * R / (per_dim - 1);
    const Vector descent = c.norm() > 0.0 ? Vector(-c / c.norm()) : Vector::Zero(dim);
    while (step > 1e-10 * std::max(R, 1e-12)) {
        bool improved = false;
        const Vector cand = pull_back(best_x + step * descent);
        if (objective(cand) < best_f - 1e-16) {
            best_x = cand;
            best_f = objective(cand);
            improved = true;
        }
        for (int t = 0; t < 64 && !improved; ++t) {
            Vector d(dim);
            for (int k = 0; k < dim; ++k) d(k) = gauss(rng);
            d.normalize();
            const Vector trial = best_x + step * d;
            if (feasible(trial) && objective(trial) < best_f - 1e-16) {
                best_x = trial;
                best_f = objective(trial);
                improved = true;
            }
        }
        if (!improved) step *= 0.5;
    }
    return base + best_f;
}

}  // namespace ramdp
