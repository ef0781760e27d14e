#include "ivccp/data.hpp"

#include "ivccp/error.hpp"

namespace ivccp {

DataSet DataSet::subset(const std::vector<Eigen::Index>& rows) const {
    DataSet out;
    const auto n = static_cast<Eigen::Index>(rows.size());
    out.y.resize(n);
    out.x.resize(n, x.cols());
    out.z.resize(n, z.cols());
    out.latent.resize(latent.rows() == size() ? n : 0, latent.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index r = rows[static_cast<std::size_t>(i)];
        if (r < 0 || r >= size()) throw InputError("dataset: row index out of range");
        out.y(i) = y(r);
        out.x.row(i) = x.row(r);
        out.z.row(i) = z.row(r);
        if (out.latent.rows() == n && n > 0) out.latent.row(i) = latent.row(r);
    }
    return out;
}

Matrix DataSet::joint_xz() const {
    Matrix w(size(), x.cols() + z.cols());
    w.leftCols(x.cols()) = x;
    w.rightCols(z.cols()) = z;
    return w;
}

bool DataSet::operator==(const DataSet& o) const {
    return y == o.y && x == o.x && z == o.z && latent.rows() == o.latent.rows() &&
           latent.cols() == o.latent.cols() && latent == o.latent;
}

DataSet concat(const DataSet& a, const DataSet& b) {
    if (a.dim_x() != b.dim_x() || a.dim_z() != b.dim_z()) throw InputError("dataset: dimension mismatch in concat");
    DataSet out;
    out.y.resize(a.size() + b.size());
    out.y << a.y, b.y;
    out.x.resize(a.size() + b.size(), a.dim_x());
    out.x << a.x, b.x;
    out.z.resize(a.size() + b.size(), a.dim_z());
    out.z << a.z, b.z;
    if (a.latent.rows() == a.size() && b.latent.rows() == b.size() && a.latent.cols() == b.latent.cols() &&
        a.latent.cols() > 0) {
        out.latent.resize(a.size() + b.size(), a.latent.cols());
        out.latent << a.latent, b.latent;
    }
    return out;
}

}  // namespace ivccp
