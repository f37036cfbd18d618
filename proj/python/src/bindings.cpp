#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "kronsolve/config.hpp"
#include "kronsolve/kinv.hpp"
#include "kronsolve/krylov.hpp"
#include "kronsolve/nkp.hpp"
#include "kronsolve/operator.hpp"
#include "kronsolve/problems.hpp"
#include "kronsolve/sylvester.hpp"
#include "kronsolve/util.hpp"

namespace py = pybind11;
using namespace kronsolve;

namespace {

KroneckerOperator make_operator(const std::vector<DenseMatrix>& A,
                                const std::vector<DenseMatrix>& B) {
    std::vector<Factor> fa(A.begin(), A.end());
    std::vector<Factor> fb(B.begin(), B.end());
    return KroneckerOperator(std::move(fa), std::move(fb));
}

py::dict history_dict(const SolveReport& rep) {
    py::dict h;
    h["converged"] = rep.history.converged;
    h["iterations"] = rep.history.iterations;
    h["residuals"] = rep.history.residuals;
    h["wall_times"] = rep.history.wall_times;
    if (!rep.history.bandwidths.empty())
        h["bandwidths"] = rep.history.bandwidths;
    h["solve_seconds"] = rep.solve_seconds;
    h["breakdown"] = rep.breakdown;
    return h;
}

std::vector<DenseMatrix> dense_list(const std::vector<Factor>& F) {
    std::vector<DenseMatrix> out;
    out.reserve(F.size());
    for (const auto& f : F) out.push_back(f.to_dense());
    return out;
}

}  // namespace

PYBIND11_MODULE(_kronsolve, m) {
    m.doc() = "Multiterm Sylvester equations with low Kronecker rank "
              "preconditioning";

    py::register_exception<Error>(m, "KronsolveError");

    py::class_<KroneckerOperator>(m, "Operator")
        .def(py::init(&make_operator), py::arg("A"), py::arg("B"),
             "Operator X -> sum_k B_k X A_k^T from right factors A and left "
             "factors B")
        .def_property_readonly("n", &KroneckerOperator::n)
        .def_property_readonly("m", &KroneckerOperator::m)
        .def_property_readonly("r", &KroneckerOperator::r)
        .def("apply", &KroneckerOperator::apply, py::arg("X"))
        .def("materialize", &KroneckerOperator::materialize,
             py::arg("cap") = 4096)
        .def("norm_frobenius", &KroneckerOperator::norm_frobenius);

    py::class_<KronApprox>(m, "KronApprox")
        .def_readonly("Ys", &KronApprox::Ys)
        .def_readonly("Zs", &KronApprox::Zs)
        .def_readonly("q", &KronApprox::q)
        .def_readonly("sigma", &KronApprox::sigma)
        .def_readonly("iterations", &KronApprox::iterations)
        .def_readonly("residual", &KronApprox::residual);

    m.def("nkp_svd", &nkp_svd, py::arg("op"), py::arg("q"));
    m.def(
        "nkp_als",
        [](const KroneckerOperator& op, int q, double tol, int max_iter) {
            NkpAlsOptions opts;
            opts.tol = tol;
            opts.max_iter = max_iter;
            return nkp_als(op, q, opts);
        },
        py::arg("op"), py::arg("q"), py::arg("tol") = -1.0,
        py::arg("max_iter") = 25);
    m.def("nkp_error", &nkp_error, py::arg("op"), py::arg("approx"));

    py::class_<KronInverse>(m, "KronInverse")
        .def_property_readonly(
            "Cs", [](const KronInverse& k) { return dense_list(k.Cs); })
        .def_property_readonly(
            "Ds", [](const KronInverse& k) { return dense_list(k.Ds); })
        .def_readonly("q", &KronInverse::q)
        .def_readonly("final_residual", &KronInverse::final_residual)
        .def_readonly("iterations", &KronInverse::iterations)
        .def_readonly("stagnation_warning", &KronInverse::stagnation_warning);

    m.def(
        "kinv_als",
        [](const KroneckerOperator& op, int q, double tol, int max_iter) {
            KinvOptions opts;
            opts.tol = tol;
            opts.max_iter = max_iter;
            return kinv_als(op, q, opts);
        },
        py::arg("op"), py::arg("q"), py::arg("tol") = -1.0,
        py::arg("max_iter") = 10);
    m.def(
        "kinv_sparse_als",
        [](const KroneckerOperator& op, int q, int power,
           const std::string& variant, double tol, int max_iter) {
            PatternVariant v = variant == "plain" ? PatternVariant::plain
                                                  : PatternVariant::gram;
            SparsityPattern pc =
                build_pattern(op, OperatorSide::right, power, v);
            SparsityPattern pd =
                build_pattern(op, OperatorSide::left, power, v);
            KinvOptions opts;
            opts.tol = tol;
            opts.max_iter = max_iter;
            return kinv_sparse_als(op, q, pc, pd, opts);
        },
        py::arg("op"), py::arg("q"), py::arg("power") = 2,
        py::arg("variant") = "gram", py::arg("tol") = -1.0,
        py::arg("max_iter") = 10);
    m.def("apply_kinv", &apply_kinv, py::arg("kinv"), py::arg("R"));
    m.def("kinv_residual", &kinv_residual, py::arg("op"), py::arg("kinv"));

    m.def("solve_one_term", &solve_one_term, py::arg("A"), py::arg("B"),
          py::arg("E"));
    m.def("solve_sylvester", &solve_standard, py::arg("A"), py::arg("B"),
          py::arg("C"), "Solves A X + X B = C");
    m.def("solve_two_sided", &solve_two_sided, py::arg("Z1"), py::arg("Z2"),
          py::arg("Y1"), py::arg("Y2"), py::arg("R"));

    auto solver_call = [](const KroneckerOperator& op, const DenseMatrix& E,
                          const std::string& method, const std::string& precond,
                          int q, double tol, int restart, int max_iter,
                          int pattern_power) {
        Preconditioner pre = Preconditioner::none();
        if (precond == "nkp") {
            pre = Preconditioner::nkp(nkp_svd(op, q));
        } else if (precond == "kinv") {
            pre = Preconditioner::kinv(kinv_als(op, q));
        } else if (precond == "kinv_sparse") {
            SparsityPattern pc =
                build_pattern(op, OperatorSide::right, pattern_power);
            SparsityPattern pd =
                build_pattern(op, OperatorSide::left, pattern_power);
            pre = Preconditioner::kinv(kinv_sparse_als(op, q, pc, pd));
        } else if (precond != "none") {
            throw ArgumentError("unknown preconditioner '" + precond + "'");
        }
        SolverOptions opts;
        opts.tol = tol;
        opts.restart = restart;
        opts.max_iter = max_iter;
        SolveReport rep = method == "bicgstab" ? bicgstab(op, pre, E, opts)
                                               : gmres(op, pre, E, opts);
        py::dict out = history_dict(rep);
        out["X"] = rep.X;
        return out;
    };
    m.def("solve", solver_call, py::arg("op"), py::arg("E"),
          py::arg("method") = "gmres", py::arg("precond") = "none",
          py::arg("q") = 1, py::arg("tol") = 1e-8, py::arg("restart") = 50,
          py::arg("max_iter") = 500, py::arg("pattern_power") = 2);

    auto instance_tuple = [](ProblemInstance inst) {
        std::vector<DenseMatrix> A = dense_list(inst.op.right_factors());
        std::vector<DenseMatrix> B = dense_list(inst.op.left_factors());
        return py::make_tuple(A, B, inst.rhs);
    };
    m.def(
        "circuit",
        [instance_tuple](Index n0) { return instance_tuple(circuit(n0)); },
        py::arg("n0"),
        "Factors (A_list, B_list) and rhs of the RC circuit benchmark");
    m.def(
        "convection_diffusion",
        [instance_tuple](Index n, double eps) {
            return instance_tuple(convection_diffusion(n, eps));
        },
        py::arg("n"), py::arg("epsilon"));
    m.def(
        "synthetic_banded",
        [instance_tuple](Index n, Index m, int r, Index band,
                         std::uint64_t seed, bool spd) {
            return instance_tuple(synthetic_banded(n, m, r, band, seed, spd));
        },
        py::arg("n"), py::arg("m"), py::arg("r"), py::arg("band"),
        py::arg("seed") = 12345, py::arg("spd") = true);

    m.def("set_max_threads", &set_max_threads, py::arg("n"));
}
