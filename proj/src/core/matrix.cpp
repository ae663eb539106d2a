#include "agri/core/matrix.hpp"

#include "agri/error.hpp"

#include <Eigen/Dense>

namespace agri::core {

OlsResult ols(const Matrix& design, std::span<const double> response) {
	const auto n = static_cast<Eigen::Index>(design.rows());
	const auto k = static_cast<Eigen::Index>(design.cols());
	if (design.rows() != response.size()) {
		throw Error(ErrorCode::LengthMismatch, "design rows and response length differ");
	}
	if (k == 0) {
		throw Error(ErrorCode::InvalidArgument, "design matrix has no columns");
	}
	if (n <= k) {
		throw Error(ErrorCode::SingularRegression, "need more observations than regressors");
	}
	Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> x(design.data().data(), n, k);
	Eigen::Map<const Eigen::VectorXd> y(response.data(), n);
	Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
	qr.setThreshold(1e-12);
	if (qr.rank() < k) {
		throw Error(ErrorCode::SingularRegression, "design matrix is rank deficient");
	}
	const Eigen::VectorXd beta = qr.solve(y);
	const Eigen::VectorXd resid = y - x * beta;

	OlsResult out;
	out.nobs = design.rows();
	out.coefficients.assign(beta.data(), beta.data() + k);
	out.residuals.assign(resid.data(), resid.data() + n);
	out.sse = resid.squaredNorm();
	const double sigma2 = out.sse / static_cast<double>(n - k);
	// (X'X)^-1 = P R^-1 R^-T P^T
	const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
	const Eigen::MatrixXd r_inv = r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
	const Eigen::MatrixXd cov_perm = r_inv * r_inv.transpose();
	const auto& perm = qr.colsPermutation();
	out.standard_errors.resize(static_cast<std::size_t>(k));
	for (Eigen::Index j = 0; j < k; ++j) {
		const auto pj = perm.indices()(j);
		out.standard_errors[static_cast<std::size_t>(pj)] = std::sqrt(sigma2 * cov_perm(j, j));
	}
	return out;
}

} // namespace agri::core
