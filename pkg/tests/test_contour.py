"""Contour geometry: constructors, arc-length parameterization, enclosure."""

import numpy as np
import pytest

from qcontour import contour, errors, numkit


def polyline_length(c, n):
    """Independent arc-length oracle: chord sum over a dense polyline that
    includes every piece endpoint (uniform grids would cut the corners)."""
    total = 0.0
    for piece in c.pieces:
        s = piece.length * np.arange(n + 1) / n
        z = np.asarray(piece.point(s))
        total += float(np.sum(np.abs(np.diff(z))))
    return total


class TestCircle:
    def test_length_and_radius(self):
        c = contour.make_circle(0.0, 1.0)
        assert c.total_length == pytest.approx(2 * np.pi)
        assert c.enclosing_radius == pytest.approx(1.0)

    def test_start_point_and_tangent(self):
        c = contour.make_circle(0.0, 2.0)
        z, th = c.points_at(0.0)
        assert z[0] == pytest.approx(2.0)
        assert th[0] == pytest.approx(np.pi / 2)

    def test_offcenter_radius(self):
        c = contour.make_circle(1.0, 1.5)
        assert c.enclosing_radius == pytest.approx(2.5)

    def test_quarter_nodes(self):
        nodes = contour.discretize(contour.make_circle(0.0, 1.0), 4)
        np.testing.assert_allclose(nodes.z, [1, 1j, -1, -1j], atol=1e-12)
        np.testing.assert_allclose(
            nodes.theta, [np.pi / 2, np.pi, 3 * np.pi / 2, 2 * np.pi], atol=1e-12
        )

    def test_single_node(self):
        nodes = contour.discretize(contour.make_circle(0.0, 1.0), 1)
        assert nodes.z[0] == pytest.approx(1.0)


class TestTruncatedDisk:
    def test_two_sided_strip_length(self):
        r1, a = 1.25, 0.25
        c = contour.make_truncated_disk(r1, -a, a)
        chord = 2 * np.sqrt(r1**2 - a**2)
        phi_r = np.arccos(a / r1)
        phi_l = np.arccos(-a / r1)
        arcs = 2 * r1 * (phi_l - phi_r)
        assert c.total_length == pytest.approx(2 * chord + arcs)
        # independent oracle: dense polyline length
        assert c.total_length == pytest.approx(polyline_length(c, 400000), abs=1e-9)

    def test_left_half_disk(self):
        c = contour.make_left_half_disk(1.0)
        assert c.total_length == pytest.approx(np.pi + 2)
        assert c.enclosing_radius == pytest.approx(1.0)

    def test_untruncated_is_exactly_the_circle(self):
        c1 = contour.make_truncated_disk(1.5)
        c2 = contour.make_circle(0.0, 1.5)
        assert len(c1.pieces) == len(c2.pieces) == 1
        p1, p2 = c1.pieces[0], c2.pieces[0]
        assert (p1.center, p1.radius, p1.start_angle, p1.end_angle) == (
            p2.center,
            p2.radius,
            p2.start_angle,
            p2.end_angle,
        )

    def test_nodes_on_region_boundary(self):
        r1, a = 1.25, 0.25
        c = contour.make_truncated_disk(r1, -a, a)
        nodes = contour.discretize(c, 64)
        for z in nodes.z:
            on_circle = abs(abs(z) - r1) < 1e-12
            on_chord = (abs(z.real - a) < 1e-12 or abs(z.real + a) < 1e-12) and abs(
                z
            ) <= r1 + 1e-12
            assert on_circle or on_chord

    def test_empty_and_degenerate(self):
        with pytest.raises(errors.EmptyRegion):
            contour.make_truncated_disk(1.0, re_min=1.5)
        with pytest.raises(errors.EmptyRegion):
            contour.make_truncated_disk(1.0, re_max=-2.0)
        with pytest.raises(errors.DegenerateChord):
            contour.make_truncated_disk(1.0, re_max=1.0)
        with pytest.raises(errors.DegenerateChord):
            contour.make_truncated_disk(1.0, re_min=-1.0)

    def test_one_sided_cuts_close_up(self):
        for c in (
            contour.make_truncated_disk(1.0, re_max=0.3),
            contour.make_truncated_disk(1.0, re_min=-0.4),
            contour.make_truncated_disk(2.0, -1.2, 0.5),
        ):
            gap = abs(c.pieces[-1].end_point() - c.pieces[0].start_point())
            assert gap < 1e-12

    def test_lens_strip_off_center(self):
        # both bounds on the same side of the origin
        c = contour.make_truncated_disk(1.0, 0.2, 0.8)
        rep = contour.verify_enclosure(c, np.array([0.5 + 0j]))
        assert rep.enclosed
        rep2 = contour.verify_enclosure(c, np.array([0.0 + 0j]))
        assert not rep2.enclosed
        assert c.min_re() == pytest.approx(0.2)
        assert c.max_re() == pytest.approx(0.8)


class TestParameterization:
    @pytest.mark.parametrize(
        "c",
        [
            contour.make_circle(0.3 + 0.1j, 1.2),
            contour.make_truncated_disk(1.25, -0.25, 0.25),
            contour.make_left_half_disk(1.0),
            contour.make_truncated_disk(2.0, re_max=0.7),
        ],
    )
    def test_unit_speed(self, c, rng):
        h = 1e-7
        t = rng.uniform(h, c.total_length - h, 1000)
        z1, _ = c.points_at(t)
        z2, _ = c.points_at(t + h)
        speed = np.abs(z2 - z1) / h
        # corners break the finite difference; tolerate a handful of hits
        ok = np.abs(speed - 1.0) < 1e-6
        assert np.mean(ok) > 0.99

    @pytest.mark.parametrize(
        "c",
        [
            contour.make_circle(0.0, 1.0),
            contour.make_truncated_disk(1.25, -0.25, 0.25),
        ],
    )
    def test_tangent_matches_derivative(self, c, rng):
        h = 1e-7
        t = rng.uniform(h, c.total_length - h, 200)
        z1, _ = c.points_at(t - h)
        z2, _ = c.points_at(t + h)
        _, th = c.points_at(t)
        deriv = (z2 - z1) / (2 * h)
        agree = np.abs(deriv - np.exp(1j * th)) < 1e-5
        assert np.mean(agree) > 0.99

    def test_polyline_length_second_order(self):
        c = contour.make_truncated_disk(1.25, -0.25, 0.25)
        errs = [abs(polyline_length(c, m) - c.total_length) for m in (128, 512, 2048)]
        # quadratic convergence: each 4x refinement gains ~16x
        assert errs[1] < errs[0] / 8
        assert errs[2] < errs[1] / 8

    def test_phase_offset(self):
        c = contour.make_circle(0.0, 1.0)
        nodes = contour.discretize(c, 4, phase_offset=c.total_length / 8)
        np.testing.assert_allclose(nodes.z[0], np.exp(1j * np.pi / 4), atol=1e-12)


class TestEnclosure:
    def test_inside(self):
        rep = contour.verify_enclosure(contour.make_circle(0.0, 1.0), np.array([0j]))
        assert rep.enclosed and rep.min_distance == pytest.approx(1.0)

    def test_outside(self):
        rep = contour.verify_enclosure(
            contour.make_circle(0.0, 1.0), np.array([2.0 + 0j])
        )
        assert not rep.enclosed
        assert rep.min_distance == pytest.approx(1.0)
        assert rep.windings[0] == 0

    def test_windings_are_integers(self, rng):
        c = contour.make_truncated_disk(1.5, -0.6, 0.9)
        pts = rng.uniform(-2, 2, 20) + 1j * rng.uniform(-2, 2, 20)
        pts = np.array([p for p in pts if c.distance_to(p) > 0.05])
        rep = contour.verify_enclosure(c, pts)
        assert set(np.unique(rep.windings)) <= {0.0, 1.0}

    def test_fast_forward_contour_margin(self):
        # eigenvalues confined to Re <= -a stay >= a away from the Re <= 0
        # truncation of the enclosing half-disk
        a_margin = 0.5
        _, info = numkit.random_diagonalizable(
            6, 2.0, numkit.SpectrumRegion.left_strip(-1.2, -a_margin, 0.7), seed=2
        )
        c = contour.make_truncated_disk(info.spectral_radius + a_margin, re_max=0.0)
        rep = contour.verify_enclosure(c, info)
        assert rep.enclosed
        assert rep.min_distance >= a_margin - 1e-9

    def test_spectral_info_input(self):
        _, info = numkit.random_diagonalizable(
            4, 2.0, numkit.SpectrumRegion.disk(0j, 0.5), seed=1
        )
        rep = contour.verify_enclosure(contour.make_circle(0.0, 1.0), info)
        assert rep.enclosed


class TestJsonSchema:
    def test_round_trip(self):
        c = contour.make_truncated_disk(1.25, -0.25, 0.25)
        c2 = contour.from_json(contour.to_json(c))
        assert c2.total_length == pytest.approx(c.total_length)
        assert len(c2.pieces) == len(c.pieces)

    def test_presets(self):
        c = contour.from_json({"preset": "circle", "radius": 2.0})
        assert c.total_length == pytest.approx(4 * np.pi)
        c = contour.from_json({"preset": "left-half-disk", "radius": 1.0})
        assert c.total_length == pytest.approx(np.pi + 2)
        c = contour.from_json(
            {"preset": "truncated-disk", "radius": 1.5, "reMax": 0.5}
        )
        assert c.max_re() == pytest.approx(0.5)

    def test_unknown_preset(self):
        with pytest.raises(errors.ParseError):
            contour.from_json({"preset": "pentagon", "radius": 1.0})

    def test_fingerprint_distinguishes(self):
        f1 = contour.make_circle(0.0, 1.0).fingerprint()
        f2 = contour.make_circle(0.0, 1.0 + 1e-9).fingerprint()
        assert f1 != f2
        assert f1 == contour.make_circle(0.0, 1.0).fingerprint()
