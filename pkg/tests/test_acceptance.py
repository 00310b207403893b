"""End-to-end acceptance checks at desk scale.

Each test prints one PASS/FAIL line per criterion. The three figure-style
sweeps run the shipped scenario configs (200 matched-seed trials per sweep
point); set UOAN_SIM_THREADS to use more worker processes.
"""

import itertools
import math
from pathlib import Path

import numpy as np
import pytest

from uoan_sim import acoustic, optical
from uoan_sim.config import load_config
from uoan_sim.experiment import _worker_count, run_sweep
from uoan_sim.geometry import face_set, link_geometry
from uoan_sim.localization import invert_range, measure_rss, multilaterate
from uoan_sim.routing import Edge, NetworkGraph, widest_path

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"
WORKERS = _worker_count()


def report(name: str, ok: bool) -> None:
    print(f"{'PASS' if ok else 'FAIL'}: {name}")
    assert ok, name


def sweep_rows(config_name, overrides=()):
    cfg = load_config(str(CONFIG_DIR / config_name), list(overrides))
    return run_sweep(cfg, workers=WORKERS).rows


@pytest.fixture(scope="session")
def rate_rows():
    return sweep_rows("fig_rate_vs_faces.yaml")


@pytest.fixture(scope="session")
def connectivity_rows():
    return {
        water: sweep_rows(
            "fig_connectivity_vs_faces.yaml", [f"optical.water_type={water}"]
        )
        for water in ("pure_sea", "coastal", "harbor")
    }


@pytest.fixture(scope="session")
def rmse_rows():
    return sweep_rows("fig_rmse_vs_faces.yaml")


def test_widest_path_matches_exhaustive_enumeration():
    rng = np.random.default_rng(2024)
    mismatches = 0
    for _ in range(1000):
        n = int(rng.integers(2, 9))
        caps = {}
        for u in range(n):
            for v in range(n):
                if u != v and rng.random() < 0.35:
                    caps[(u, v)] = float(rng.integers(1, 50))
        g = NetworkGraph(
            node_ids=list(range(n)),
            sink_id=n - 1,
            edges=[Edge(u, v, c, 0.0, "optical") for (u, v), c in caps.items()],
        )
        best = None
        others = list(range(1, n - 1))
        for k in range(len(others) + 1):
            for mids in itertools.permutations(others, k):
                path = (0,) + mids + (n - 1,)
                b = math.inf
                for a, z in zip(path, path[1:]):
                    if (a, z) not in caps:
                        b = None
                        break
                    b = min(b, caps[(a, z)])
                if b is not None:
                    best = b if best is None else max(best, b)
        got = widest_path(g, 0, n - 1)
        if (best is None) != (got is None):
            mismatches += 1
        elif best is not None and got.bottleneck_rate != best:
            mismatches += 1
    report("widest-path bottleneck equals exhaustive enumeration on 1000 graphs", mismatches == 0)


def test_channel_identities():
    water = optical.WaterType.preset("clear_ocean")
    ok = all(
        abs(optical.transmittance(2 * d, water) - optical.transmittance(d, water) ** 2)
        <= 1e-12 * optical.transmittance(2 * d, water)
        for d in (0.1, 1.0, 7.0, 30.0, 90.0)
    )
    report("Beer-Lambert transmittance satisfies T(2d) = T(d)^2", ok)

    report(
        "Thorp absorption at 10 kHz equals 1.187 dB/km within 0.001",
        abs(acoustic.thorp_absorption(10.0) - 1.187) <= 1e-3,
    )

    # numeric Gaussian-tail oracle, independent of erfc
    xs = np.linspace(3.0, 40.0, 2_000_001)
    q3 = float(np.trapezoid(np.exp(-xs * xs / 2.0) / math.sqrt(2 * math.pi), xs))
    params = optical.OpticalParams()
    pr = 3.0 * math.sqrt(params.noise_variance) / params.responsivity  # electrical SNR = 9
    report("OOK BER at SNR 9 equals Q(3) within 1e-6 of quadrature", abs(optical.ber(pr, params) - q3) < 1e-6)


def test_mean_rate_grows_with_face_count(rate_rows):
    rates = [r["mean_e2e_bps"] for r in rate_rows]
    ok = all(b >= a for a, b in zip(rates, rates[1:]))
    report("mean E2E rate non-decreasing in n_faces (clear ocean)", ok)
    report("mean E2E rate strictly higher at 32 faces than at 2", rates[-1] > rates[0])


def test_connectivity_trends(connectivity_rows):
    for water, rows in connectivity_rows.items():
        probs = [r["conn_prob"] for r in rows]
        report(
            f"connectivity probability non-decreasing in n_faces ({water})",
            all(b >= a for a, b in zip(probs, probs[1:])),
        )
    ok = all(
        p["conn_prob"] >= c["conn_prob"] >= h["conn_prob"]
        for p, c, h in zip(
            connectivity_rows["pure_sea"],
            connectivity_rows["coastal"],
            connectivity_rows["harbor"],
        )
    )
    report("connectivity ordering pure_sea >= coastal >= harbor at every point", ok)


def test_localization_rmse_structure(rmse_rows):
    aco = [r["rmse_acoustic_m"] for r in rmse_rows]
    opt = [r["rmse_optical_m"] for r in rmse_rows]
    hyb = [r["rmse_hybrid_m"] for r in rmse_rows]
    report("acoustic RMSE below optical at the widest divergence", aco[0] < opt[0])
    report(
        "optical RMSE decreases as per-face divergence narrows",
        all(b < a for a, b in zip(opt, opt[1:])),
    )
    report(
        "optical RMSE crosses below acoustic past a divergence threshold",
        any(o <= a for o, a in zip(opt, aco)),
    )
    report(
        "hybrid RMSE at or below min(acoustic, optical) at every point",
        all(h <= min(a, o) for h, a, o in zip(hyb, aco, opt)),
    )


def test_localization_oracles():
    refs = np.array(
        [[0.0, 0, 0], [50.0, 5.0, 0], [0, 50.0, 5.0], [5.0, 0, 50.0], [40.0, 40.0, 20.0]]
    )
    rng = np.random.default_rng(17)
    worst = 0.0
    for _ in range(100):
        truth = rng.uniform(-10, 60, size=3)
        est = multilaterate(refs, np.linalg.norm(refs - truth, axis=1))
        worst = max(worst, float(np.linalg.norm(est - truth)))
    report("noise-free multilateration recovers truth within 1e-6 m", worst < 1e-6)

    water = optical.WaterType.preset("clear_ocean")
    ok = all(
        abs(
            invert_range(
                measure_rss(d, "optical", gain=1e-4, water=water, noise_sigma_db=0.0),
                "optical",
                gain=1e-4,
                water=water,
            )
            - d
        )
        < 1e-4
        for d in (5.0, 25.0, 60.0)
    )
    report("optical RSS round trip within 1e-4 m at 5/25/60 m", ok)

    aco = acoustic.AcousticParams()
    ok = all(
        abs(
            invert_range(
                measure_rss(d, "acoustic", aco_params=aco, noise_sigma_db=0.0),
                "acoustic",
                aco_params=aco,
            )
            - d
        )
        < 1e-4
        for d in (10.0, 200.0, 1000.0)
    )
    report("acoustic RSS round trip within 1e-4 m at 10/200/1000 m", ok)


def test_sweep_determinism(tmp_path):
    overrides = ["experiment.trials=50"]
    cfg = load_config(str(CONFIG_DIR / "fig_rate_vs_faces.yaml"), overrides)
    a, b, c = (tmp_path / n for n in ("a.csv", "b.csv", "c.csv"))
    run_sweep(cfg, out_csv=str(a), workers=1)
    run_sweep(cfg, out_csv=str(b), workers=1)
    report("same seed reproduces a byte-identical sweep CSV", a.read_bytes() == b.read_bytes())
    run_sweep(cfg, out_csv=str(c), workers=2)
    report("serial and parallel sweeps are identical", a.read_bytes() == c.read_bytes())


def test_rate_sanity_envelopes():
    aco = acoustic.AcousticParams()
    c500 = acoustic.capacity(500.0, aco)
    report("default acoustic capacity at 500 m within 10-50 kbps", 1.0e4 <= c500 <= 5.0e4)

    params = optical.OpticalParams()
    clear = optical.WaterType.preset("clear_ocean")
    fs = face_set(8)
    geom = link_geometry(np.zeros(3), fs, np.array([0.0, 0.0, 30.0]), fs)
    pr = optical.received_power(geom, fs, params, clear)
    report(
        "default optical in-beam capacity at 30 m (clear ocean) above 1 Mbps",
        optical.capacity(pr, params) > 1.0e6,
    )

    coastal = optical.WaterType.preset("coastal")
    ok = True
    for n in (2, 4, 8, 16, 32):
        fs = face_set(n)
        geom = link_geometry(np.zeros(3), fs, np.array([0.0, 0.0, 100.0]), fs)
        pr = optical.received_power(geom, fs, params, coastal)
        ok &= optical.ber(pr, params) > params.fec_ber_threshold
    report("no coastal optical edge survives beyond 100 m at any face count", ok)
