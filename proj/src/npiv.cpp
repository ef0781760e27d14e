#include "ivccp/npiv.hpp"

#include <cmath>
#include <string>

#include "ivccp/error.hpp"
#include "ivccp/numkit/linalg.hpp"

namespace ivccp {

Standardizer Standardizer::fit(const Matrix& data) {
    if (data.rows() == 0) throw InputError("standardizer: empty data");
    Standardizer s;
    s.mean = data.colwise().mean().transpose();
    s.scale.resize(data.cols());
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
        const double var = (data.col(j).array() - s.mean(j)).square().mean();
        s.scale(j) = var > 0.0 ? std::sqrt(var) : 1.0;
    }
    return s;
}

Vector Standardizer::apply(const Vector& v) const {
    if (v.size() != mean.size()) throw InputError("standardizer: dimension mismatch");
    return (v - mean).cwiseQuotient(scale);
}

Matrix Standardizer::apply(const Matrix& rows) const {
    if (rows.cols() != mean.size()) throw InputError("standardizer: dimension mismatch");
    Matrix out = rows.rowwise() - mean.transpose();
    return out.array().rowwise() / scale.transpose().array();
}

std::vector<std::vector<int>> poly_exponents(Eigen::Index dim, int degree, PolyTerms terms) {
    if (degree < 1) throw InputError("polynomial basis: degree must be at least 1");
    const auto k = static_cast<std::size_t>(dim);
    std::vector<std::vector<int>> out{std::vector<int>(k, 0)};
    if (terms == PolyTerms::Full) {
        // graded order: all monomials of degree 1, then 2, ...
        for (int total = 1; total <= degree; ++total) {
            std::vector<int> e(k, 0);
            auto rec = [&](auto&& self, std::size_t pos, int left) -> void {
                if (pos + 1 == k) {
                    e[pos] = left;
                    out.push_back(e);
                    return;
                }
                for (int p = left; p >= 0; --p) {
                    e[pos] = p;
                    self(self, pos + 1, left - p);
                }
            };
            if (k > 0) rec(rec, 0, total);
        }
        return out;
    }
    for (std::size_t j = 0; j < k; ++j)
        for (int p = 1; p <= degree; ++p) {
            std::vector<int> e(k, 0);
            e[j] = p;
            out.push_back(e);
        }
    if (terms == PolyTerms::Pairwise)
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = a + 1; b < k; ++b) {
                std::vector<int> e(k, 0);
                e[a] = e[b] = 1;
                out.push_back(e);
            }
    return out;
}

namespace {

void fill_row(const std::vector<std::vector<int>>& exps, const double* v, Eigen::Index k, int degree,
              std::vector<double>& powers, double* out, Eigen::Index stride) {
    // powers[j * (degree + 1) + p] = v_j^p
    for (Eigen::Index j = 0; j < k; ++j) {
        double p = 1.0;
        for (int e = 0; e <= degree; ++e) {
            powers[static_cast<std::size_t>(j * (degree + 1) + e)] = p;
            p *= v[j];
        }
    }
    for (std::size_t c = 0; c < exps.size(); ++c) {
        double term = 1.0;
        for (Eigen::Index j = 0; j < k; ++j) {
            const int e = exps[c][static_cast<std::size_t>(j)];
            if (e) term *= powers[static_cast<std::size_t>(j * (degree + 1) + e)];
        }
        out[static_cast<Eigen::Index>(c) * stride] = term;
    }
}

}  // namespace

Vector poly_features(const Vector& v, int degree, PolyTerms terms) {
    const auto exps = poly_exponents(v.size(), degree, terms);
    Vector out(static_cast<Eigen::Index>(exps.size()));
    std::vector<double> powers(static_cast<std::size_t>(v.size() * (degree + 1)));
    fill_row(exps, v.data(), v.size(), degree, powers, out.data(), 1);
    return out;
}

Matrix poly_basis(const Matrix& rows, int degree, PolyTerms terms) {
    const Eigen::Index k = rows.cols();
    const auto exps = poly_exponents(k, degree, terms);
    Matrix out(rows.rows(), static_cast<Eigen::Index>(exps.size()));
    std::vector<double> powers(static_cast<std::size_t>(k * (degree + 1)));
    for (Eigen::Index i = 0; i < rows.rows(); ++i)
        fill_row(exps, rows.row(i).data(), k, degree, powers, out.row(i).data(), 1);
    return out;
}

std::string_view to_string(PolyTerms t) {
    switch (t) {
        case PolyTerms::Additive: return "additive";
        case PolyTerms::Pairwise: return "pairwise";
        case PolyTerms::Full: return "full";
    }
    return "?";
}

PolyTerms parse_poly_terms(std::string_view name) {
    if (name == "additive") return PolyTerms::Additive;
    if (name == "pairwise") return PolyTerms::Pairwise;
    if (name == "full") return PolyTerms::Full;
    throw ConfigError("unknown polynomial terms '" + std::string(name) + "'");
}

StructuralModel fit_sieve_2sls(const DataSet& train, const SieveSpec& spec) {
    if (train.size() == 0) throw InputError("2sls: empty training set");
    if (spec.degree_x < 1 || spec.degree_z < 1) throw ConfigError("2sls: degrees must be at least 1");
    if (spec.ridge < 0.0) throw ConfigError("2sls: ridge must be nonnegative");
    StructuralModel model;
    model.spec = spec;
    model.x_std = Standardizer::fit(train.x);
    model.z_std = Standardizer::fit(train.z);

    const Matrix psi = poly_basis(model.x_std.apply(train.x), spec.degree_x, spec.terms);
    const Matrix inst = poly_basis(model.z_std.apply(train.z), spec.degree_z, spec.terms);
    if (psi.cols() > train.size() || inst.cols() > train.size())
        throw InputError("2sls: basis dimension exceeds training size");

    // Stage one: project every X-basis column onto the instrument span.
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(inst);
    const Eigen::MatrixXd psi_hat = inst * cod.solve(Eigen::MatrixXd(psi));
    // Stage two: regress Y on the projected columns. The ridge leaves the
    // intercept alone so a constant outcome is fit exactly.
    if (spec.ridge > 0.0) {
        const Eigen::Index p = psi_hat.cols();
        Matrix A = Matrix::Zero(psi_hat.rows() + p - 1, p);
        A.topRows(psi_hat.rows()) = psi_hat;
        A.bottomRightCorner(p - 1, p - 1).diagonal().setConstant(std::sqrt(spec.ridge));
        Vector b = Vector::Zero(A.rows());
        b.head(train.size()) = train.y;
        model.beta = solve_least_squares(A, b, 0.0);
    } else {
        model.beta = solve_least_squares(psi_hat, train.y, 0.0);
    }
    return model;
}

double predict_h(const StructuralModel& model, const Vector& x) {
    if (x.size() != model.x_std.mean.size()) throw InputError("predict_h: x dimension mismatch");
    const Vector psi = poly_features(model.x_std.apply(x), model.spec.degree_x, model.spec.terms);
    return psi.dot(model.beta);
}

Vector predict_h(const StructuralModel& model, const Matrix& x_rows) {
    const Matrix psi =
        poly_basis(model.x_std.apply(x_rows), model.spec.degree_x, model.spec.terms);
    return psi * model.beta;
}

}  // namespace ivccp
