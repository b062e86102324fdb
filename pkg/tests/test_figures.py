"""Figure rendering: files appear next to the series and bytes are stable."""

import json

from fairbandit.figures import render_figures


def write_series(figures_dir):
    figures_dir.mkdir(parents=True, exist_ok=True)
    fig1 = {"figure": 1, "metric": "avg_reward", "feature_sets": [0, 1, 2],
            "series": {"man": {"mean": [0.44, 0.45, 0.43],
                               "ci95_lo": [0.43, 0.44, 0.42],
                               "ci95_hi": [0.45, 0.46, 0.44]},
                       "woman": {"mean": [0.45, 0.44, 0.42],
                                 "ci95_lo": [0.44, 0.43, 0.41],
                                 "ci95_hi": [0.46, 0.45, 0.43]}},
            "n_runs": 10, "axis_variants": {"zero_based": 0.0, "zoomed": 0.38}}
    fig3 = {"figure": 3, "x": [100, 200, 300],
            "mean": [0.3, 0.5, 0.7], "min": [0.2, 0.4, 0.6],
            "max": [0.4, 0.6, 0.8], "n_runs": 10}
    fig4 = {"figure": 4, "intervals": [[1, 100], [101, 200], [201, 300]],
            "mean": [0.3, 0.6, 0.9], "min": [0.2, 0.5, 0.8],
            "max": [0.4, 0.7, 1.0], "n_runs": 10}
    for name, doc in (("fig1", fig1), ("fig3", fig3), ("fig4", fig4)):
        (figures_dir / f"{name}.json").write_text(json.dumps(doc))


def test_renders_all_series(tmp_path):
    figures_dir = tmp_path / "figures"
    write_series(figures_dir)
    rendered = render_figures(figures_dir)
    assert set(rendered) == {"fig1.png", "fig1_zero.png", "fig3.png", "fig4.png"}
    for name in rendered:
        assert (figures_dir / name).stat().st_size > 1000


def test_rendering_is_byte_deterministic(tmp_path):
    figures_dir = tmp_path / "figures"
    write_series(figures_dir)
    render_figures(figures_dir)
    first = {p.name: p.read_bytes() for p in figures_dir.glob("*.png")}
    render_figures(figures_dir)
    second = {p.name: p.read_bytes() for p in figures_dir.glob("*.png")}
    assert first == second
