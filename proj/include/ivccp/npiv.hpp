#pragma once

#include <string_view>
#include <vector>

#include "ivccp/data.hpp"

namespace ivccp {

/// Additive: 1 and powers of each coordinate. Pairwise: additive plus the
/// products v_a v_b (a < b). Full: every monomial of total degree <= degree.
enum class PolyTerms { Additive, Pairwise, Full };

struct SieveSpec {
    int degree_x = 3;
    int degree_z = 3;
    PolyTerms terms = PolyTerms::Full;
    double ridge = 1e-6;

    bool operator==(const SieveSpec&) const = default;
};

struct Standardizer {
    Vector mean;
    Vector scale;

    static Standardizer fit(const Matrix& data);
    Vector apply(const Vector& v) const;
    Matrix apply(const Matrix& rows) const;
};

/// Series two-stage least squares fit; predictions are psi(std(x)) . beta.
struct StructuralModel {
    SieveSpec spec;
    Vector beta;
    Standardizer x_std;
    Standardizer z_std;
};

/// Exponent tuples of the basis terms, constant first. Additive and Pairwise
/// list (v1, ..., v1^degree, v2, ..., vk^degree) then the pairwise products;
/// Full lists monomials by total degree, then lexicographically.
std::vector<std::vector<int>> poly_exponents(Eigen::Index dim, int degree, PolyTerms terms);

Vector poly_features(const Vector& v, int degree, PolyTerms terms = PolyTerms::Additive);

Matrix poly_basis(const Matrix& rows, int degree, PolyTerms terms = PolyTerms::Additive);

std::string_view to_string(PolyTerms t);
PolyTerms parse_poly_terms(std::string_view name);

/// beta = argmin ||P_Z (Y - Psi beta)||^2 + ridge ||beta[1:]||^2 with P_Z the
/// projector onto the instrument basis; the intercept is not penalized.
StructuralModel fit_sieve_2sls(const DataSet& train, const SieveSpec& spec);

double predict_h(const StructuralModel& model, const Vector& x);
Vector predict_h(const StructuralModel& model, const Matrix& x_rows);

}  // namespace ivccp
