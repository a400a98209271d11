#include "sls/linalg.hpp"

#include <cmath>

namespace sls {

PsdPinvResult pinv_psd(const Eigen::MatrixXd& m, double rel_tol) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    const Eigen::VectorXd& lambda = eig.eigenvalues();
    const Eigen::MatrixXd& v = eig.eigenvectors();

    PsdPinvResult out;
    out.min_eigenvalue = lambda.minCoeff();
    out.max_eigenvalue = lambda.maxCoeff();

    const double cutoff = rel_tol * std::max(out.max_eigenvalue, 0.0);
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(lambda.size());
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        if (lambda(i) > cutoff && lambda(i) > 0.0) {
            inv(i) = 1.0 / lambda(i);
            ++out.rank;
        }
    }
    Eigen::MatrixXd p = v * inv.asDiagonal() * v.transpose();
    out.pinv = 0.5 * (p + p.transpose());
    return out;
}

Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(0.0);
    Eigen::MatrixXd r = eig.eigenvectors() * lambda.cwiseSqrt().asDiagonal() *
                        eig.eigenvectors().transpose();
    return 0.5 * (r + r.transpose());
}

double max_root_modulus(const Eigen::VectorXd& coeffs) {
    const Eigen::Index p = coeffs.size();
    if (p == 1) return std::abs(coeffs(0));

    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
    companion.row(0) = coeffs.transpose();
    companion.block(1, 0, p - 1, p - 1).setIdentity();

    Eigen::EigenSolver<Eigen::MatrixXd> eig(companion, /*computeEigenvectors=*/false);
    return eig.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace sls
