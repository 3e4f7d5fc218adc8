"""Test package surface and the error hierarchy"""

import pytest


def test_imports():
    """Test that the package entry points import"""
    from cli import dispatch, main, parse_config
    from core import FlowRunner, RadialGraph, XiFunction, quermass_vector
    from verify import run_suite, verify_inequalities

    for obj in (FlowRunner, RadialGraph, XiFunction, quermass_vector):
        assert obj is not None
    for obj in (run_suite, verify_inequalities, dispatch, main, parse_config):
        assert callable(obj)


def test_error_hierarchy():
    """Domain errors are ValueErrors; everything derives from QuermassFlowError"""
    from core.errors import (
        ConfigError,
        DomainError,
        FlowBreakdownError,
        GeometryError,
        PreconditionError,
        QuermassFlowError,
        SingularRatioError,
        StepRejectedError,
    )

    for cls in (
        ConfigError,
        DomainError,
        FlowBreakdownError,
        GeometryError,
        PreconditionError,
        SingularRatioError,
        StepRejectedError,
    ):
        assert issubclass(cls, QuermassFlowError)
    assert issubclass(SingularRatioError, DomainError)
    assert issubclass(DomainError, ValueError)
    assert issubclass(PreconditionError, ValueError)
    assert not issubclass(FlowBreakdownError, ValueError)


def test_error_payloads():
    """Node, spectrum, trace and field paths travel with the exception"""
    from core.errors import ConfigError, FlowBreakdownError, GeometryError

    err = GeometryError("w is not finite", node=7)
    assert err.node == 7
    assert "node 7" in str(err)
    assert str(GeometryError("bad")) == "bad"

    breakdown = FlowBreakdownError("left the cone", node=(3,), spectrum=[0.1, -0.2])
    assert breakdown.node == (3,)
    assert breakdown.trace is None

    assert ConfigError("bad").paths == []
    assert ConfigError("bad", ["grid.mode"]).paths == ["grid.mode"]


def test_domain_error_is_catchable_as_value_error():
    """Callers catching ValueError see bad radii"""
    from core.quermass import sphere_quermass

    with pytest.raises(ValueError):
        sphere_quermass(2, 2.0, 0)
