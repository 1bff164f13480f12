#pragma once

#include <cstddef>
#include <vector>

#include "lqr_regret/model.hpp"
#include "lqr_regret/types.hpp"

namespace lqr {

// Finite-horizon Riccati sequences, forward indexed:
//   P[t] for t = 0..T with P[T] = Qf,
//   K[t], S[t] for t = 0..T-1, both built from P[t+1].
struct FiniteHorizonRiccati {
  std::vector<Matrix> P;
  std::vector<Matrix> K;
  std::vector<Matrix> S;
  // Cholesky factors of R + BᵀP[t+1]B, one per step.
  std::vector<Eigen::LLT<Matrix>> inner;

  std::size_t horizon() const noexcept { return K.size(); }
};

struct DareSolution {
  Matrix P;
  Matrix K;
  Matrix S;
  // ‖P − Q − AᵀPA + AᵀPB(R + BᵀPB)⁻¹BᵀPA‖_F.
  double residual = 0.0;
  double closed_loop_radius = 0.0;
  std::size_t iterations = 0;
};

struct RiccatiSolution {
  FiniteHorizonRiccati finite;
  DareSolution steady;
};

struct DareOptions {
  double tol = 1e-12;
  std::size_t max_iter = 100000;
};

// One Riccati step from P_next: returns (P, K, S) and the factor of R + BᵀP_next B.
struct RiccatiStep {
  Matrix P;
  Matrix K;
  Matrix S;
  Eigen::LLT<Matrix> inner;
};
RiccatiStep riccati_step(const SystemSpec& spec, const Matrix& P_next);

FiniteHorizonRiccati backward_riccati(const SystemSpec& spec, Horizon T);

DareSolution solve_dare(const SystemSpec& spec, const DareOptions& options = {});

double are_residual(const SystemSpec& spec, const Matrix& P);

// Both pieces for the given horizon.
RiccatiSolution solve_riccati(const SystemSpec& spec, Horizon T, const DareOptions& options = {});

struct DlyapOptions {
  double tol = 1e-12;
  std::size_t max_iter = 1000000;
  // Systems up to this size use the vectorized direct solve.
  Eigen::Index direct_max_n = 8;
};

// V = G + FᵀVF. Requires ρ(F) < 1 − 1e-9.
Matrix solve_dlyap(const Matrix& F, const Matrix& G, const DlyapOptions& options = {});
Matrix solve_dlyap_fixed_point(const Matrix& F, const Matrix& G, const DlyapOptions& options = {});
// Solves (I − Fᵀ⊗Fᵀ) vec(V) = vec(G).
Matrix solve_dlyap_direct(const Matrix& F, const Matrix& G);

double dlyap_residual(const Matrix& F, const Matrix& G, const Matrix& V);

}  // namespace lqr
