"""
Tests for risk-coverage figures.
"""
from selective_zsc.evaluation import ideal_curve, rcc
from selective_zsc.plotting import curve_label, save_rcc_svg


def test_label_carries_aurcc(six_samples):
    assert curve_label("full", rcc(*six_samples)) == "full [0.0889]"


def test_svg_is_written_atomically(tmp_path, six_samples):
    confidences, correct = six_samples
    curves = {"ours": rcc(confidences, correct), "ideal": ideal_curve(correct)}
    save_rcc_svg(curves, tmp_path / "rcc.svg", title="six samples")
    text = (tmp_path / "rcc.svg").read_text()
    assert "<svg" in text
    assert "ours [0.0889]" in text
    assert [p.name for p in tmp_path.iterdir()] == ["rcc.svg"]


def test_svg_is_reproducible(tmp_path, six_samples):
    curves = {"ours": rcc(*six_samples)}
    save_rcc_svg(curves, tmp_path / "a.svg")
    save_rcc_svg(curves, tmp_path / "b.svg")
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()
