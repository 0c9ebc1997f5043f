import xml.etree.ElementTree as ET

import numpy as np
import pytest

from transient_bor.plots import line_plot

NS = "{http://www.w3.org/2000/svg}"


def test_svg_structure():
    t = np.linspace(0, 1e-8, 50)
    svg = line_plot("a < b", [("one", t, np.sin(t * 1e9)), ("two", t, np.cos(t * 1e9))],
                    "time (ns)", "field", [(5e-9, 0.0)], 1e9)
    root = ET.fromstring(svg)
    assert len(root.findall(f"{NS}polyline")) == 2
    assert len(root.findall(f"{NS}circle")) == 1
    texts = [e.text for e in root.iter(f"{NS}text")]
    assert "a < b" in texts and "one" in texts


def test_degenerate_inputs():
    svg = line_plot("flat", [("c", [0.0, 0.0], [1.0, 1.0])], "x", "y")
    ET.fromstring(svg)
    with pytest.raises(ValueError):
        line_plot("none", [], "x", "y")
