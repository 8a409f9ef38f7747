import xml.etree.ElementTree as ET

import numpy as np

from dial.plots import line_svg, scatter_svg


def test_scatter_is_valid_and_deterministic(tmp_path):
    rng = np.random.default_rng(0)
    x, y = rng.standard_normal(30), rng.standard_normal(30)
    groups = ["src/pos", "tgt/neg", "src/neg"] * 10
    a = scatter_svg(tmp_path / "a.svg", x, y, groups, title="a & b")
    b = scatter_svg(tmp_path / "b.svg", x, y, groups, title="a & b")
    assert a.read_bytes() == b.read_bytes()
    root = ET.parse(a).getroot()
    assert sum(1 for e in root.iter() if e.tag.endswith("circle")) == 30


def test_line_handles_flat_series_and_errors(tmp_path):
    p = line_svg(tmp_path / "l.svg", [0, 0.5, 1], {"flat": [0.5, 0.5, 0.5], "up": [0.1, 0.4, 0.9]},
                 {"up": [0.05, 0.0, 0.05]})
    root = ET.parse(p).getroot()
    assert sum(1 for e in root.iter() if e.tag.endswith("polyline")) == 2
    assert sum(1 for e in root.iter() if e.tag.split("}")[-1] == "line") == 2
