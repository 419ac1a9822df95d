"""Heatmap SVG rendering tests."""

from derplace import heatmap_npp, new_session
from derplace.svg import FILL, export_heatmap_svg, tree_layout


def test_svg_has_one_circle_per_node(chain3):
    s = new_session(chain3, "npp")
    hm = heatmap_npp(s, "n1")
    svg = export_heatmap_svg(hm, chain3)
    assert svg.count("<circle") == 3
    assert svg.count("<line") == 2
    # performance node marked with a square outline
    assert '<rect' in svg and 'fill="none"' in svg


def test_svg_colors_follow_heatmap(feeder25):
    s = new_session(feeder25, "npp")
    hm = heatmap_npp(s, "n11")
    svg = export_heatmap_svg(hm, feeder25)
    for entry in hm.entries:
        assert FILL[entry.color] in svg or entry.color not in FILL


def test_svg_grey_for_placed(chain3):
    from derplace import accept_placement

    s = new_session(chain3, "npp")
    heatmap_npp(s, "n2")
    accept_placement(s, "n1", "n2")
    hm = heatmap_npp(s, "n2")
    svg = export_heatmap_svg(hm, chain3)
    assert FILL["grey"] in svg


def test_svg_deterministic_without_positions(chain3):
    s = new_session(chain3, "npp")
    hm = heatmap_npp(s, "n1")
    assert export_heatmap_svg(hm, chain3) == export_heatmap_svg(hm, chain3)


def test_tree_layout_levels(chain3):
    layout = tree_layout(chain3)
    assert layout["s0"][1] == 0.0
    assert layout["n1"][1] == 1.0
    assert layout["n2"][1] == 2.0


def test_legend_shows_threshold(chain3):
    s = new_session(chain3, "npp", threshold=0.07)
    hm = heatmap_npp(s, "n1")
    svg = export_heatmap_svg(hm, chain3)
    assert ">= 7%" in svg
