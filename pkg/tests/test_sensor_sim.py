import io
import math

import numpy as np
import pytest
from scipy import stats

from skyconst.error_model import HoverModel
from skyconst.geometry import PolarPoint
from skyconst.sensor_sim import (
    SensorModel,
    cloud_to_csv_text,
    expected_point_count,
    read_cloud_csv,
    synthesize_cloud,
    synthesize_clutter,
)

MODEL = SensorModel()
TRUE = PolarPoint(0.0, 6.0)



@pytest.mark.parametrize("t,d", [(0.0, 1.0), (-1.0, 1.0), (1.0, -0.1), (1.0, 12.5)])
def test_expected_count_rejects_bad_inputs(t, d):
    with pytest.raises(ValueError):
        expected_point_count(MODEL, t, d)


def test_degenerate_noise_puts_points_on_target():
    m = SensorModel(scatter_sigma_theta=1e-12, scatter_sigma_rho=1e-13, clutter_rate=0.0)
    cloud = synthesize_cloud(TRUE, m, None, 2.0, rng=3)
    th, r, p = cloud.arrays()
    assert len(cloud) > 0
    np.testing.assert_allclose(th, 0.0, atol=1e-9)
    np.testing.assert_allclose(r, 6.0, atol=1e-9)
    assert np.all(p > 0)


def test_seeded_output_is_identical():
    a = cloud_to_csv_text(synthesize_cloud(TRUE, MODEL, HoverModel(), 2.0, rng=99))
    b = cloud_to_csv_text(synthesize_cloud(TRUE, MODEL, HoverModel(), 2.0, rng=99))
    assert a == b
    c = cloud_to_csv_text(synthesize_cloud(TRUE, MODEL, HoverModel(), 2.0, rng=100))
    assert a != c


def test_points_sorted_in_time_and_inside_sector():
    cloud = synthesize_cloud(TRUE, MODEL, HoverModel(), 2.0, rng=1)
    t = [p.t for p in cloud.points]
    assert t == sorted(t)
    th, r, _ = cloud.arrays()
    assert np.all(np.abs(th) <= MODEL.fov) and np.all((r >= 0) & (r <= MODEL.dist_max))


def test_sample_mean_near_truth():
    m = SensorModel(clutter_rate=0.0)
    cloud = synthesize_cloud(TRUE, m, None, 20.0, rng=7)
    th, r, _ = cloud.arrays()
    n = len(th)
    assert n > 200
    assert abs(th.mean() - TRUE.theta) < 3 * m.scatter_sigma_theta / math.sqrt(n)
    assert abs(r.mean() - TRUE.rho) < 3 * m.scatter_sigma_rho / math.sqrt(n)


def test_hover_displacement_statistics():
    hover = HoverModel(0.9, 0.05)
    centers = np.array(
        [
            (c.theta, c.rho)
            for c in (
                synthesize_cloud(TRUE, MODEL, hover, 0.1, rng=s).center for s in range(2000)
            )
        ]
    )
    assert abs(centers[:, 0].mean()) < 3 * 0.9 / math.sqrt(2000)
    assert centers[:, 0].std() == pytest.approx(0.9, rel=0.1)
    assert centers[:, 1].std() == pytest.approx(0.05, rel=0.1)


def test_target_count_matches_poisson_mean():
    m = SensorModel(clutter_rate=0.0)
    counts = np.array([len(synthesize_cloud(TRUE, m, None, 2.0, rng=s)) for s in range(400)])
    lam = expected_point_count(m, 2.0, TRUE.rho)
    # total of 400 Poisson draws is Poisson(400*lam); 99.9% two-sided bounds
    lo, hi = stats.poisson.ppf([0.0005, 0.9995], 400 * lam)
    assert lo <= counts.sum() <= hi
    assert counts.var() == pytest.approx(lam, rel=0.25)


def test_histograms_unimodal_at_truth():
    m = SensorModel(clutter_rate=0.0)
    th, r, _ = synthesize_cloud(TRUE, m, None, 200.0, rng=5).arrays()
    for values, width, truth in ((th, 1.0, 0.0), (r, 0.02, 6.0)):
        edges = np.arange(truth - 10.5 * width, truth + 10.6 * width, width)
        h, _ = np.histogram(values, edges)
        k = int(np.argmax(h))
        centers = 0.5 * (edges[1:] + edges[:-1])
        assert abs(centers[k] - truth) <= width
        assert np.all(np.diff(h[: k + 1]) >= -0.05 * h[k])
        assert np.all(np.diff(h[k:]) <= 0.05 * h[k])


def test_density_decreases_with_range():
    m = SensorModel(clutter_rate=0.0)
    means = [
        np.mean([len(synthesize_cloud(PolarPoint(0, d), m, None, 2.0, rng=s)) for s in range(200)])
        for d in (2.0, 6.0, 10.0)
    ]
    assert means[0] > means[1] > means[2]


def test_target_outside_range_rejected():
    with pytest.raises(ValueError):
        synthesize_cloud(PolarPoint(0.0, 13.0), MODEL, None, 2.0, rng=0)


def test_clutter_only_has_no_center_and_is_uniform_by_area():
    cloud = synthesize_clutter(MODEL, 500.0, rng=2)
    assert cloud.center is None
    _, r, _ = cloud.arrays()
    # area-uniform radii: (r / dist_max)^2 ~ U(0, 1)
    assert stats.kstest((r / MODEL.dist_max) ** 2, "uniform").pvalue > 1e-3


def test_csv_round_trip():
    cloud = synthesize_cloud(TRUE, MODEL, HoverModel(), 2.0, rng=11)
    text = cloud_to_csv_text(cloud)
    back = read_cloud_csv(io.StringIO("# comment line\n" + text), t_meas=2.0)
    assert back.points == cloud.points
    assert cloud_to_csv_text(back) == text


@pytest.mark.parametrize(
    "text",
    [
        "a,b,c,d\n1,2,3,4\n",
        "t_s,theta_deg,rho_m,power\n1,2,3\n",
        "t_s,theta_deg,rho_m,power\n1,2,3,-1\n",
    ],
)
def test_csv_rejects_malformed(text):
    with pytest.raises(ValueError):
        read_cloud_csv(io.StringIO(text))


def test_model_validation():
    with pytest.raises(ValueError):
        SensorModel(rate_r=0)
    with pytest.raises(ValueError):
        SensorModel(scatter_sigma_theta=0.01, scatter_sigma_rho=0.5)
