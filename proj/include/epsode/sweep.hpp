#pragma once

#include <vector>

#include "epsode/types.hpp"

namespace epsode {

// Relative pivot threshold: |a_kk| <= kPivotTolerance * (1 + scale) is singular.
inline constexpr double kPivotTolerance = 1e-10;

/// Sweeps the symmetric matrix `a` on diagonal entry `k`.
///
/// `scale` is the magnitude the pivot is judged against; by default the
/// largest absolute entry of `a` is used. Throws ErrorCode::pivot_too_small.
SymMatrix sweep(const SymMatrix& a, Index k, double scale = -1.0);

/// Undoes `sweep` on the same diagonal entry.
SymMatrix inverse_sweep(const SymMatrix& a, Index k, double scale = -1.0);

// In-place variants used by the tableau.
void sweep_in_place(SymMatrix& a, Index k, double scale = -1.0);
void inverse_sweep_in_place(SymMatrix& a, Index k, double scale = -1.0);

struct KktBlocks {
  Matrix p;  // H^-1 projected onto the null space of the active rows
  Matrix q;  // p x |Z|
  Matrix r;  // |Z| x |Z|
};

/// Blocks of the inverse of the bordered matrix [[H, U'], [U, 0]] given H^-1.
/// Throws ErrorCode::rank_deficient_active_set when U H^-1 U' is singular.
KktBlocks kkt_blocks(const SymMatrix& h_inv, const Matrix& u_active);

/// Orthonormal basis of the null space of a set of active constraint rows.
class NullBasis {
 public:
  explicit NullBasis(Matrix active_matrix);

  const Matrix& active_matrix() const { return active_; }
  const Matrix& basis() const { return basis_; }
  Index rank() const { return rank_; }

 private:
  Matrix active_;
  Matrix basis_;
  Index rank_ = 0;
};

NullBasis null_basis(const Matrix& u_active);

/// Bordered sweep tableau
///
///     [ H^-1     H^-1 U' ]
///     [ U H^-1   U H^-1 U' ]
///
/// over all constraint rows U (equality rows first, then inequality rows).
/// Sweeping a constraint diagonal activates that constraint; after sweeping
/// the active set Z, the parameter block holds P, the (param, Z) block holds
/// Q and the (Z, Z) block holds R.
class SweepTableau {
 public:
  SweepTableau(const SymMatrix& h_inv, const Matrix& u_all);

  Index params() const { return params_; }
  Index constraints() const { return constraints_; }
  bool swept(Index constraint) const { return swept_[static_cast<std::size_t>(constraint)]; }
  std::vector<Index> active() const;

  const SymMatrix& matrix() const { return table_; }
  // Replaces the tableau entries (e.g. after integrating them along a
  // segment); the swept flags are left untouched.
  void set_matrix(SymMatrix table);

  /// Sweeps (activate) or inverse sweeps (deactivate) a constraint diagonal.
  void update(Index constraint, bool activate);

  Matrix p_block() const;
  Matrix q_block() const;  // columns ordered as active()
  Matrix r_block() const;

 private:
  Index params_;
  Index constraints_;
  SymMatrix table_;
  std::vector<double> scale_;
  std::vector<bool> swept_;
};

/// Functional form of SweepTableau::update.
SweepTableau tableau_sweep_update(SweepTableau t, Index constraint, bool activate);

}  // namespace epsode
