#pragma once

#include "ramdp/mdp.hpp"
#include "ramdp/types.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

namespace ramdp {

inline constexpr double kInfNorm = std::numeric_limits<double>::infinity();

/// Hoelder conjugate: 1/p + 1/q = 1.
double conjugate_exponent(double p);

enum class SetKind { Contamination, LpBall };

enum class ForbiddenMode {
    Auto,     ///< F(s,a) = { s' : P0(s'|s,a) = 0 }
    None,     ///< no masking
    Explicit  ///< caller-supplied sets
};

/// (s,a)-rectangular uncertainty set around a nominal kernel.
///
/// Contamination rows are {(1-R) P0(.|s,a) + R q : q in simplex}. Lp rows are
/// {p in simplex : ||p - P0(.|s,a)||_p <= R, p(s') = 0 on F(s,a)}. The model
/// keeps its own copy of the nominal kernel so support queries need only (s,a).
class UncertaintyModel {
public:
    static UncertaintyModel contamination(const TabularMdp& mdp, const QTable& radius);
    static UncertaintyModel contamination(const TabularMdp& mdp, double radius);
    static UncertaintyModel lp_ball(const TabularMdp& mdp, double p, const QTable& radius,
                                    ForbiddenMode mode = ForbiddenMode::Auto);
    static UncertaintyModel lp_ball(const TabularMdp& mdp, double p, double radius,
                                    ForbiddenMode mode = ForbiddenMode::Auto);
    /// `forbidden[s*A + a]` lists F(s,a); every listed state must have P0 = 0.
    static UncertaintyModel lp_ball(const TabularMdp& mdp, double p, const QTable& radius,
                                    const std::vector<std::vector<int>>& forbidden);

    SetKind kind() const { return kind_; }
    /// Ball norm order (LpBall only).
    double p() const { return p_; }
    /// Conjugate order used by the penalty.
    double q() const { return q_; }
    ForbiddenMode forbidden_mode() const { return mode_; }
    int num_states() const { return num_states_; }
    int num_actions() const { return num_actions_; }

    double radius(int s, int a) const { return radius_(s, a); }
    const QTable& radius() const { return radius_; }
    auto nominal_row(int s, int a) const { return nominal_.row(row(s, a)); }
    const Kernel& nominal() const { return nominal_; }

    /// States outside F(s,a), ascending.
    std::span<const int> effective_support(int s, int a) const { return support_[std::size_t(row(s, a))]; }
    /// Small-radius condition min_{s' not in F} P0(s'|s,a) >= R(s,a). Always true
    /// for contamination.
    bool is_exact(int s, int a) const { return exact_[std::size_t(row(s, a))] != 0; }
    bool all_exact() const;
    /// Number of (s,a) pairs failing the small-radius condition.
    int count_inexact() const;

    Eigen::Index row(int s, int a) const { return Eigen::Index(s) * num_actions_ + a; }

private:
    UncertaintyModel() = default;
    void finish_lp(const std::vector<std::vector<int>>* explicit_forbidden);

    SetKind kind_ = SetKind::Contamination;
    double p_ = 1.0;
    double q_ = kInfNorm;
    ForbiddenMode mode_ = ForbiddenMode::Auto;
    int num_states_ = 0;
    int num_actions_ = 0;
    Kernel nominal_;
    QTable radius_;
    std::vector<std::vector<int>> support_;
    std::vector<char> exact_;
};

/// p-variance min_w ||u - w 1||_q, with u restricted to the coordinates in
/// `support`. Returns 0 for fewer than two coordinates.
double kappa(const Eigen::Ref<const Vector>& v, double q, std::span<const int> support);
/// Unmasked variant over every coordinate.
double kappa(const Eigen::Ref<const Vector>& v, double q);

/// sigma(s,a)(v) = min over the row set of <p, v>, closed form.
double support(const UncertaintyModel& model, int s, int a, const Eigen::Ref<const Vector>& v);

struct TaggedSupport {
    double value;
    bool exact;  ///< false when the penalty form is used outside its validity range (then a lower bound)
};
TaggedSupport support_tagged(const UncertaintyModel& model, int s, int a,
                             const Eigen::Ref<const Vector>& v);

/// Brute-force minimisation of <p, v> over the row set: vertex enumeration for
/// contamination, grid search plus local refinement for Lp balls. Only
/// feasible points are evaluated, so the result never undercuts the true
/// minimum. Effective support must have at most 6 states.
double support_oracle(const UncertaintyModel& model, int s, int a, const Eigen::Ref<const Vector>& v);

/// A row p* of the set with <p*, v> = support(model, s, a, v). Ties go to the
/// lowest state index. Throws DegeneracyError for Lp rows failing the
/// small-radius condition.
Vector worst_case_kernel_row(const UncertaintyModel& model, int s, int a,
                             const Eigen::Ref<const Vector>& v);

/// Uniformly-ish random member of the row set (used for bias-span probing).
Vector random_feasible_row(const UncertaintyModel& model, int s, int a, std::mt19937_64& rng);

/// Whether `row` belongs to the (s,a) set up to `tol`.
bool row_in_set(const UncertaintyModel& model, int s, int a, const Eigen::Ref<const Vector>& row,
                double tol = 1e-9);

}  // namespace ramdp
