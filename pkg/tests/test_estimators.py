import numpy as np
import pytest
from sklearn.base import clone
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import StandardScaler

from stqp_goe import EdgeEventTransformer, StQPSolver
from stqp_goe.events import EDGE_FIELDS, classify_edges
from stqp_goe.goe import order_instance, sample_goe
from stqp_goe.rng import derive_stream
from stqp_goe.solver import solve_enumerate


@pytest.fixture
def batch():
    return np.stack([np.asarray(sample_goe(6, derive_stream(50, i))) for i in range(40)])


def test_solver_fit(batch):
    est = StQPSolver().fit(batch)
    for i in (0, 17, 39):
        res = solve_enumerate(batch[i])
        assert est.value_[i] == res.value and est.kappa_[i] == res.kappa
        assert est.support_[i] == res.support and np.array_equal(est.x_[i], res.x)
    assert est.n_features_in_ == 6


def test_solver_predict_and_score(batch):
    est = StQPSolver(k_max=6)
    assert np.array_equal(est.fit(batch).predict(batch), est.value_)
    assert est.score(batch) == pytest.approx(np.mean(est.kappa_ == 1))


def test_solver_single_matrix():
    est = StQPSolver().fit(np.diag([1.0, 2.0, 4.0]))
    assert est.kappa_.tolist() == [3]


def test_solver_params_clone():
    est = StQPSolver(k_max=2)
    assert clone(est).get_params() == {"k_max": 2}


def test_transformer(batch):
    t = EdgeEventTransformer().fit(batch)
    out = t.transform(batch)
    assert out.shape == (40, len(EDGE_FIELDS))
    rep = classify_edges(order_instance(batch[5]))
    assert out[5, EDGE_FIELDS.index("cond_a")] == rep.cond_a
    assert list(t.get_feature_names_out()) == list(EDGE_FIELDS)


def test_transformer_in_pipeline(batch):
    out = make_pipeline(EdgeEventTransformer(), StandardScaler()).fit_transform(batch)
    assert out.shape == (40, len(EDGE_FIELDS))


def test_transformer_checks(batch):
    with pytest.raises(Exception):
        EdgeEventTransformer().transform(batch)
    t = EdgeEventTransformer().fit(batch)
    with pytest.raises(ValueError):
        t.transform(batch[:, :5, :5])
    with pytest.raises(ValueError):
        t.fit(np.zeros((3, 4)))
