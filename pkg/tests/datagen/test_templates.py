"""Tests for geometry templates, spec files and boundary-condition perturbation."""

import math

import numpy as np
import pytest
from pydantic import ValidationError

from hemo_gnn.config.loader import ConfigError
from hemo_gnn.datagen.perturb import perturb_bcs
from hemo_gnn.datagen.templates import GeometrySpec, InflowSpec, OutletSpec, generate_geometry, load_specs
from hemo_gnn.errors import ContractError
from hemo_gnn.graph.centerline import INLET, JUNCTION, OUTLET
from hemo_gnn.hemo1d.boundary import BcMode, RcrParams


class TestGenerateGeometry:
    """Tests for tube, bifurcation and tree templates."""

    def test_tube(self):
        generated = generate_geometry(GeometrySpec(id="t", template="tube", nodes_per_segment=6))
        assert generated.graph.n_nodes == 6
        assert list(generated.bcs) == [0]
        outlet = OutletSpec()
        assert generated.bcs[0].Rp == pytest.approx(outlet.Rp)
        assert generated.bcs[0].C == pytest.approx(outlet.C)

    def test_bifurcation_follows_murray(self):
        spec = GeometrySpec(id="b", template="bifurcation", nodes_per_segment=5, radius=1.0)
        generated = generate_geometry(spec)
        segments = generated.geometry.segments
        assert len(segments) == 3
        for child in segments[1:]:
            assert child.r0[0] == pytest.approx(2.0 ** (-1.0 / 3.0))
        # parent cross-section r^3 is conserved across the split
        assert sum(s.r0[0] ** 3 for s in segments[1:]) == pytest.approx(1.0)

    def test_bifurcation_graph(self):
        graph = generate_geometry(GeometrySpec(id="b", nodes_per_segment=5)).graph
        assert graph.n_nodes == 5 + 4 + 4
        assert int(np.sum(graph.node_type == INLET)) == 1
        assert int(np.sum(graph.node_type == OUTLET)) == 2
        assert int(np.sum(graph.node_type == JUNCTION)) == 3
        assert graph.has_boundary_edges

    def test_outlet_conditions_split_by_cubed_radius(self):
        generated = generate_geometry(GeometrySpec(id="b", nodes_per_segment=3))
        outlet = OutletSpec()
        conductance = sum(1.0 / (bc.Rp + bc.Rd) for bc in generated.bcs.values())
        assert 1.0 / conductance == pytest.approx(outlet.Rp + outlet.Rd)
        assert sum(bc.C for bc in generated.bcs.values()) == pytest.approx(outlet.C)

    def test_tree_generations(self):
        spec = GeometrySpec(id="tree", template="tree", generations=2, nodes_per_segment=3, radius=1.2)
        generated = generate_geometry(spec)
        assert len(generated.geometry.segments) == 7
        assert len(generated.bcs) == 4

    def test_resistance_outlets(self):
        spec = GeometrySpec(id="b", nodes_per_segment=3, outlet=OutletSpec(Rp=1000.0, mode="resistance"))
        bcs = generate_geometry(spec).bcs
        assert all(bc.mode is BcMode.RESISTANCE for bc in bcs.values())
        assert all(bc.Rp == pytest.approx(2000.0) for bc in bcs.values())

    def test_jitter_is_seeded(self):
        spec = GeometrySpec(id="b", nodes_per_segment=3, radius_jitter=0.1)
        a = generate_geometry(spec, np.random.default_rng(4)).geometry.segments[1].r0
        b = generate_geometry(spec, np.random.default_rng(4)).geometry.segments[1].r0
        assert np.array_equal(a, b)

    def test_area_out_of_range(self):
        with pytest.raises(ContractError, match="outside"):
            generate_geometry(GeometrySpec(id="big", template="tube", radius=2.0))


class TestSpecModels:
    """Tests for inflow and outlet spec validation."""

    def test_inflow_waveform(self):
        inflow = InflowSpec(mean=5.0, amplitudes=[2.0], phases=[0.0], T_cc=0.2)
        assert inflow.evaluate(0.0) == pytest.approx(7.0)
        assert inflow.evaluate(0.1) == pytest.approx(3.0)
        samples = inflow.sample(0.02, 10)
        assert samples.shape == (11,)
        assert samples[0] == pytest.approx(samples[-1])

    def test_inflow_scaling(self):
        scaled = InflowSpec(mean=5.0, amplitudes=[2.0], phases=[0.0]).scaled(1.1)
        assert scaled.mean == pytest.approx(5.5)
        assert scaled.amplitudes == [pytest.approx(2.2)]

    def test_mismatched_harmonics(self):
        with pytest.raises(ValidationError):
            InflowSpec(amplitudes=[1.0, 2.0], phases=[0.0])

    def test_rcr_outlet_needs_capacitance(self):
        with pytest.raises(ValidationError):
            OutletSpec(C=0.0)


class TestLoadSpecs:
    """Tests for geometry spec files."""

    def test_mapping_form(self, tiny_specs_file):
        specs = load_specs(tiny_specs_file)
        assert [s.id for s in specs] == ["tube", "bif"]
        assert specs[0].inflow.T_cc == 0.2

    def test_list_form(self, tmp_path):
        path = tmp_path / "specs.yaml"
        path.write_text("- id: a\n  template: tube\n- id: b\n")
        specs = load_specs(path)
        assert [s.template.value for s in specs] == ["tube", "bifurcation"]

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_specs(tmp_path / "nope.yaml")

    def test_empty_file(self, tmp_path):
        path = tmp_path / "specs.yaml"
        path.write_text("")
        with pytest.raises(ConfigError, match="empty"):
            load_specs(path)

    def test_unknown_field(self, tmp_path):
        path = tmp_path / "specs.yaml"
        path.write_text("- id: a\n  colour: red\n")
        with pytest.raises(ConfigError, match="Invalid geometry spec"):
            load_specs(path)

    def test_duplicate_ids(self, tmp_path):
        path = tmp_path / "specs.yaml"
        path.write_text("- id: a\n- id: a\n")
        with pytest.raises(ConfigError, match="unique"):
            load_specs(path)


class TestPerturbBcs:
    """Tests for inflow and outlet scaling factors."""

    BCS = {1: RcrParams(Rp=100.0, C=1e-4, Rd=1000.0), 2: RcrParams(Rp=200.0, C=5e-5, Rd=2000.0)}

    def test_factors_in_range(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            perturbed = perturb_bcs(InflowSpec(), self.BCS, rng)
            assert set(perturbed.factors) == {"inflow", "outlet_1", "outlet_2"}
            assert all(0.8 <= f <= 1.2 for f in perturbed.factors.values())

    def test_fixed_factors(self):
        factors = {"inflow": 1.1, "outlet_1": 0.9, "outlet_2": 1.2}
        perturbed = perturb_bcs(InflowSpec(mean=10.0), self.BCS, factors=factors)
        assert perturbed.inflow.mean == pytest.approx(11.0)
        assert perturbed.bcs[1].Rp == pytest.approx(90.0)
        assert perturbed.bcs[2].Rd == pytest.approx(2400.0)
        assert math.isclose(perturbed.bcs[2].C, 6e-5)

    def test_missing_fixed_factor(self):
        with pytest.raises(ContractError, match="Missing"):
            perturb_bcs(InflowSpec(), self.BCS, factors={"inflow": 1.0})

    def test_sampling_needs_rng(self):
        with pytest.raises(ContractError):
            perturb_bcs(InflowSpec(), self.BCS)

    def test_invalid_range(self):
        with pytest.raises(ContractError):
            perturb_bcs(InflowSpec(), self.BCS, np.random.default_rng(0), low=1.2, high=0.8)
