import shutil

import pytest

from conftest import corpus_constraint_sets, unit_and_graph
from srvscan.frontend import locate_sinks
from srvscan.pathcheck import (
    PathConstraintSet,
    PathNotFound,
    ReachabilityVerdict,
    SolverError,
    Sort,
    Status,
    builtin,
    check_reachability,
    enumerate_path_constraints,
)
from srvscan.pathcheck.smtlib import parse_output, to_smtlib
from srvscan.pathcheck.terms import Lit, Var, app, eq, not_

HAVE_Z3 = shutil.which("z3") is not None
BACKENDS = ["builtin"] + (["external"] if HAVE_Z3 else [])

x, y, z = (Var(n, Sort.ADDR) for n in "xyz")


def h(a):
    return app("h", [a], Sort.U)


@pytest.fixture(scope="module")
def corpus_sets():
    return dict(corpus_constraint_sets())


@pytest.mark.parametrize("backend", BACKENDS)
def test_transitivity_clash(backend):
    pcs = PathConstraintSet.of([eq(x, y), eq(y, z), not_(eq(x, z))])
    assert check_reachability(pcs, backend).status is Status.UNSAT


@pytest.mark.parametrize("backend", BACKENDS)
def test_injective_hash(backend):
    clash = [eq(h(x), h(y)), not_(eq(x, y))]
    assert check_reachability(PathConstraintSet.of(clash, injective=["h"]), backend).status is Status.UNSAT
    assert check_reachability(PathConstraintSet.of(clash), backend).status is Status.SAT


@pytest.mark.parametrize("backend", BACKENDS)
def test_distinct_literals(backend):
    pcs = PathConstraintSet.of([eq(x, Lit("1", Sort.ADDR)), eq(x, Lit("2", Sort.ADDR))])
    assert check_reachability(pcs, backend).status is Status.UNSAT


def test_sat_model_names_every_variable():
    v = check_reachability(PathConstraintSet.of([not_(eq(x, y))]))
    assert v.status is Status.SAT
    assert set(v.model) == {"x", "y"} and v.model["x"] != v.model["y"]


def test_value_cap_gives_unknown():
    v = builtin.solve(PathConstraintSet.of([not_(eq(x, y))]), caps={Sort.ADDR: 1})
    assert v.status is Status.UNKNOWN and v.reason


def test_model_only_with_sat():
    with pytest.raises(ValueError):
        ReachabilityVerdict(Status.UNSAT, {"x": "1"})


def test_validate_rejects_undeclared_names():
    pcs = PathConstraintSet.of([eq(x, y)])
    del pcs.variables["y"]
    with pytest.raises(ValueError):
        check_reachability(pcs)
    with pytest.raises(ValueError):
        check_reachability(PathConstraintSet.of([eq(x, y)]), "magic")


def test_permit_reaches_sink(corpus_sets):
    (pcs,) = [p for k, p in corpus_sets.items() if k.startswith("fig8_interest_vulnerable:SMA")]
    for backend in BACKENDS:
        assert check_reachability(pcs, backend).status is Status.SAT


def test_owner_only_permit_is_unreachable(corpus_sets):
    (pcs,) = [p for k, p in corpus_sets.items() if k.startswith("interest_permit_owner_only:SMA")]
    for backend in BACKENDS:
        assert check_reachability(pcs, backend).status is Status.UNSAT


def test_sequence_without_the_function():
    unit, graph = unit_and_graph("fig5_hermez_vulnerable.sol")
    site = locate_sinks(unit)[0]
    with pytest.raises(PathNotFound):
        enumerate_path_constraints(unit, graph, ["withdraw"], site, "Hermez.nonexistent")


def test_constraints_are_deterministic():
    first = [(k, to_smtlib(p)) for k, p in corpus_constraint_sets()]
    second = [(k, to_smtlib(p)) for k, p in corpus_constraint_sets()]
    assert first == second
    for _, text in first:
        assert text.count("(check-sat)") == 1


def test_builtin_models_are_deterministic(corpus_sets):
    for pcs in corpus_sets.values():
        assert builtin.solve(pcs) == builtin.solve(pcs)


def test_parse_output():
    assert parse_output("sat\n((x 1)\n (|a b| Addr!val!0))") == (Status.SAT, {"x": "1", "a b": "Addr!val!0"})
    assert parse_output("unsat\n") == (Status.UNSAT, None)
    assert parse_output("unknown") == (Status.UNKNOWN, None)
    for bad in ["", "(error \"line 1: bad\")", "segfault"]:
        with pytest.raises(SolverError):
            parse_output(bad)


def test_missing_solver_binary(tmp_path):
    with pytest.raises(SolverError):
        check_reachability(PathConstraintSet.of([eq(x, y)]), "external", solver_path=str(tmp_path / "nope"))
