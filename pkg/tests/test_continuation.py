from __future__ import annotations

import dataclasses
import logging

import numpy as np
import pytest

from poiseuille2d import ParameterError
from poiseuille2d.continuation import (
    ArclengthOptions,
    PseudoArclength,
    fold_candidates,
    hermite_extremum,
)


def circle(z):
    return np.array([z[0] ** 2 + z[1] ** 2 - 1.0])


def circle_jacobian(z):
    return np.array([[2.0 * z[0], 2.0 * z[1]]])


@pytest.fixture
def options():
    return ArclengthOptions(ds=0.1, ds_min=1e-4, ds_max=0.2, max_steps=12)


def tracker(options, **kwargs):
    kwargs.setdefault('jacobian', circle_jacobian)
    return PseudoArclength(circle, np.array([0.0, 1.0]), np.ones(2), options=options, **kwargs)


def test_points_stay_on_curve(options):
    steps = list(tracker(options))
    assert len(steps) == options.max_steps
    for step in steps:
        assert abs(circle(step.z)[0]) < 1e-9
        assert np.linalg.norm(step.tangent) == pytest.approx(1.0)
    assert steps[0].z[0] > 0.0
    assert [s.index for s in steps] == list(range(1, options.max_steps + 1))


def test_negative_direction(options):
    step = tracker(options, direction=-1.0).advance()
    assert step is not None
    assert step.z[0] < 0.0


def test_step_grows_to_maximum(options):
    steps = list(tracker(options))
    assert steps[0].ds == pytest.approx(0.1)
    assert max(s.ds for s in steps) == pytest.approx(options.ds_max)


def test_fold_is_located(options):
    steps = list(tracker(options))
    folds = list(fold_candidates(steps))
    assert len(folds) == 1
    a, b = folds[0]
    theta, peak = hermite_extremum(a.z[0], b.z[0], a.tangent[0], b.tangent[0], b.ds)
    assert 0.0 <= theta <= 1.0
    assert peak == pytest.approx(1.0, abs=1e-4)


def test_fold_with_finite_differences(options):
    steps = list(tracker(options, jacobian=None, workers=1))
    assert len(list(fold_candidates(steps))) == 1


def test_hermite_needs_sign_change():
    with pytest.raises(ParameterError):
        hermite_extremum(0.0, 1.0, 1.0, 0.5, 1.0)


def test_hermite_minimum():
    # p(s) = (s - 0.25)^2 on [0, 1]
    theta, value = hermite_extremum(0.0625, 0.5625, -0.5, 1.5, 1.0)
    assert theta == pytest.approx(0.25, abs=1e-6)
    assert value == pytest.approx(0.0, abs=1e-10)


def test_reject_last(options):
    t = tracker(options)
    first = t.advance()
    second = t.advance()
    assert first is not None
    assert second is not None
    assert t.reject_last()
    assert t.count == 1
    assert t.ds == pytest.approx(0.25 * second.ds)
    np.testing.assert_allclose(t.z, first.z)
    with pytest.raises(ParameterError):
        t.reject_last()


def test_reject_last_without_shrinking(options):
    t = tracker(options)
    assert t.advance() is not None
    second = t.advance()
    assert second is not None
    assert t.reject_last(shrink=False)
    assert t.ds == pytest.approx(second.ds)


def test_rejecting_every_retry_truncates(options, caplog):
    caplog.set_level(logging.WARNING)
    t = tracker(options)
    assert t.advance() is not None
    outcomes = []
    for _ in range(20):
        assert t.advance() is not None
        outcomes.append(t.reject_last())
        if not outcomes[-1]:
            break
    assert outcomes == [True] * 5 + [False]
    assert t.truncated
    assert t.count == 1
    assert t.message.startswith('Rejected step cannot shrink')
    assert len(caplog.records) == 1
    assert caplog.records[0].message.startswith('Continuation stopped after 1 points')


def test_consecutive_rejections_are_bounded(options):
    t = tracker(dataclasses.replace(options, max_rejections=3))
    assert t.advance() is not None
    outcomes = []
    for _ in range(10):
        assert t.advance() is not None
        outcomes.append(t.reject_last(shrink=False))
        if not outcomes[-1]:
            break
    assert outcomes == [True, True, True, False]
    assert t.truncated
    assert t.message == '4 steps rejected in a row'


def test_accepted_step_resets_rejections(options):
    t = tracker(options)
    assert t.advance() is not None
    assert t.advance() is not None
    assert t.reject_last()
    assert t.rejections == 1
    assert t.advance() is not None
    assert t.advance() is not None
    assert t.rejections == 0


def test_reject_without_step(options):
    with pytest.raises(ParameterError):
        tracker(options).reject_last()


def test_step_underflow_truncates():
    options = ArclengthOptions(ds=0.1, ds_min=0.05, ds_max=0.1, max_steps=5)

    def hopeless(z):
        if z[0] > 0.01:
            return np.array([np.nan])
        return circle(z)

    t = PseudoArclength(
        hopeless,
        np.array([0.0, 1.0]),
        np.ones(2),
        jacobian=circle_jacobian,
        options=options,
    )
    assert list(t) == []
    assert t.truncated
    assert t.message


def test_resume_reproduces_next_step(options):
    reference = list(tracker(options))[2]

    first = tracker(options)
    first.advance()
    first.advance()
    state = first.resume_state()
    resumed = PseudoArclength(
        circle,
        first.z,
        np.ones(2),
        jacobian=circle_jacobian,
        tangent=first.tangent,
        options=dataclasses.replace(options, ds=state.ds),
        jacobian0=state.jacobian,
        age=state.age,
    )
    step = resumed.advance()
    assert step is not None
    np.testing.assert_allclose(step.z, reference.z, rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize(
    'kwargs',
    [{'ds': 0.0}, {'ds': 2.0, 'ds_max': 1.0}, {'ds': 1e-5, 'ds_min': 1e-4}],
)
def test_invalid_options(kwargs):
    with pytest.raises(ParameterError):
        ArclengthOptions(**kwargs)
