#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ius/dynamics.hpp"
#include "test_support.hpp"

#include <Eigen/Eigenvalues>

using namespace ius;

namespace {

// M = sum_i m_i Jv_i^T Jv_i + Jw_i^T R_i I_i R_i^T Jw_i with per-link COM Jacobians
// built from the matrix-chain oracle.
Matrix7d mass_matrix_oracle(const ArmModel& model, const Vector7d& q)
{
    std::array<Eigen::Matrix4d, kNumJoints> link;
    std::array<Eigen::Vector3d, kNumJoints> origin;
    std::array<Eigen::Vector3d, kNumJoints> axis;
    Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
    for (std::size_t i = 0; i < kNumJoints; ++i) {
        t = t * model.joints[i].parent_transform.matrix();
        origin[i] = t.topRightCorner<3, 1>();
        axis[i] = t.topLeftCorner<3, 3>() * model.joints[i].axis;
        t = t * test::rodrigues(model.joints[i].axis, q(static_cast<long>(i)));
        link[i] = t;
    }
    Matrix7d m = Matrix7d::Zero();
    for (std::size_t k = 0; k < kNumJoints; ++k) {
        const Eigen::Matrix3d r = link[k].topLeftCorner<3, 3>();
        const Eigen::Vector3d com = r * model.links[k].com + link[k].topRightCorner<3, 1>();
        Eigen::Matrix<double, 3, 7> jv = Eigen::Matrix<double, 3, 7>::Zero();
        Eigen::Matrix<double, 3, 7> jw = Eigen::Matrix<double, 3, 7>::Zero();
        for (std::size_t i = 0; i <= k; ++i) {
            jv.col(static_cast<long>(i)) = axis[i].cross(com - origin[i]);
            jw.col(static_cast<long>(i)) = axis[i];
        }
        m += model.links[k].mass * jv.transpose() * jv + jw.transpose() * r * model.links[k].inertia * r.transpose() * jw;
    }
    return m;
}

}  // namespace

TEST_CASE("composite rigid body mass matrix matches the Jacobian-sum oracle")
{
    const ArmModel model = reference_arm();
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 100; ++trial) {
        const Vector7d q = test::random_configuration(model, rng);
        const Matrix7d m = mass_matrix(model, q);
        const Matrix7d oracle = mass_matrix_oracle(model, q);
        CHECK((m - oracle).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((m - m.transpose()).cwiseAbs().maxCoeff() == 0.0);
        CHECK(Eigen::SelfAdjointEigenSolver<Matrix7d>(m).eigenvalues().minCoeff() > 0.0);
    }
}

TEST_CASE("Newton-Euler bias torques match the Lagrangian finite-difference oracle")
{
    // c_i = sum_k dM_ij/dq_k qd_k qd_j - 1/2 qd^T dM/dq_i qd
    const ArmModel model = reference_arm();
    std::mt19937_64 rng(22);
    const double h = 1e-6;
    for (int trial = 0; trial < 50; ++trial) {
        const Vector7d q = test::random_configuration(model, rng, 0.1);
        const Vector7d qd = test::random_vector7(rng, 1.5);
        std::array<Matrix7d, 7> dm;
        for (long k = 0; k < 7; ++k) {
            Vector7d qp = q;
            Vector7d qm = q;
            qp(k) += h;
            qm(k) -= h;
            dm[static_cast<std::size_t>(k)] = (mass_matrix_oracle(model, qp) - mass_matrix_oracle(model, qm)) / (2 * h);
        }
        Matrix7d mdot = Matrix7d::Zero();
        for (long k = 0; k < 7; ++k) {
            mdot += dm[static_cast<std::size_t>(k)] * qd(k);
        }
        Vector7d expected = mdot * qd;
        for (long i = 0; i < 7; ++i) {
            expected(i) -= 0.5 * qd.dot(dm[static_cast<std::size_t>(i)] * qd);
        }
        CHECK((bias_torques(model, q, qd) - expected).cwiseAbs().maxCoeff() < 1e-7);
    }
}

TEST_CASE("bias torques vanish at rest and scale quadratically with velocity")
{
    const ArmModel model = reference_arm();
    std::mt19937_64 rng(23);
    const Vector7d q = test::random_configuration(model, rng);
    const Vector7d qd = test::random_vector7(rng);
    CHECK(bias_torques(model, q, Vector7d::Zero()).norm() == 0.0);
    CHECK((bias_torques(model, q, 2.0 * qd) - 4.0 * bias_torques(model, q, qd)).cwiseAbs().maxCoeff() < 1e-12);
    // Coriolis forces do no work: qd^T (Mdot - 2C) qd = 0 implies qd^T c = 1/2 qd^T Mdot qd.
    const double h = 1e-7;
    const Matrix7d mdot = (mass_matrix(model, q + h * qd) - mass_matrix(model, q - h * qd)) / (2 * h);
    CHECK(std::abs(qd.dot(bias_torques(model, q, qd)) - 0.5 * qd.dot(mdot * qd)) < 1e-7);
}
