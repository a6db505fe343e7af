"""Tests for the experiment-config parser and initial-distribution builder."""

import math

import numpy as np
import pytest

from collapsesim.cli_io.config import (
    ExperimentConfig,
    InitSpec,
    config_hash,
    make_initial_distribution,
    parse_config,
    parse_config_text,
    resolved_items,
    resolved_text,
)
from collapsesim.dist_core import sigma, support_size
from collapsesim.errors import InfeasibleTarget, ParseError, ValidationError
from collapsesim.schedules import ScheduleKind

from conftest import make_rng

MINIMAL = """
schedule.kind = fully_synthetic
schedule.n = 20
init.s = 10
init.s_tilde = 5
init.S0 = 0.38
max_generations = 50
replicates = 100
seed = 7
"""

SWEEP_STYLE = """
# window comparison at fixed budget
schedule.kind = most_recent
schedule.n = 10
schedule.K = 4
init.s = 600
init.s_tilde = 52
init.S0 = 0.1
max_generations = 500
replicates = 100
seed = 0
output.directory = runs/window
output.formats = csv,json
"""


class TestParseConfigText:
    def test_minimal_valid(self):
        cfg = parse_config_text(MINIMAL)
        assert cfg.schedule.kind is ScheduleKind.FULLY_SYNTHETIC
        assert cfg.schedule.n == 20
        assert cfg.init.s == 10 and cfg.init.s_tilde == 5
        assert cfg.init.s0 == pytest.approx(0.38)
        assert cfg.max_generations == 50
        assert cfg.replicates == 100
        assert cfg.seed == 7
        assert cfg.out_dir == "out"
        assert cfg.formats == ("csv",)

    def test_comments_and_blank_lines_ignored(self):
        cfg = parse_config_text(SWEEP_STYLE)
        assert cfg.schedule.kind is ScheduleKind.MOST_RECENT
        assert cfg.schedule.window == 4
        assert cfg.max_generations == 500
        assert cfg.out_dir == "runs/window"
        assert cfg.formats == ("csv", "json")

    def test_missing_equals_is_parse_error_with_line(self):
        text = MINIMAL.replace("seed = 7", "seed 7")
        with pytest.raises(ParseError, match=r"line 9"):
            parse_config_text(text)

    def test_unknown_key_is_validation_error_with_line(self):
        with pytest.raises(ValidationError, match=r"line 2.*schedule\.m"):
            parse_config_text("\nschedule.m = 3\n" + MINIMAL)

    def test_duplicate_key_is_validation_error_with_line(self):
        text = MINIMAL + "seed = 8\n"
        with pytest.raises(ValidationError, match=r"seed"):
            parse_config_text(text)

    def test_missing_schedule_kind(self):
        text = MINIMAL.replace("schedule.kind = fully_synthetic\n", "")
        with pytest.raises(ValidationError, match="schedule.kind"):
            parse_config_text(text)

    def test_unknown_schedule_kind_names_line(self):
        text = MINIMAL.replace("fully_synthetic", "bootstrap")
        with pytest.raises(ValidationError, match=r"line 2.*bootstrap"):
            parse_config_text(text)

    def test_missing_n(self):
        text = MINIMAL.replace("schedule.n = 20\n", "")
        with pytest.raises(ValidationError, match="schedule.n"):
            parse_config_text(text)

    def test_partially_requires_corpus_size(self):
        text = MINIMAL.replace("fully_synthetic", "partially_synthetic")
        with pytest.raises(ValidationError, match="schedule.N"):
            parse_config_text(text)

    def test_most_recent_requires_window(self):
        text = MINIMAL.replace("fully_synthetic", "most_recent")
        with pytest.raises(ValidationError, match="schedule.K"):
            parse_config_text(text)

    def test_extraneous_corpus_size_rejected_with_line(self):
        text = MINIMAL + "schedule.N = 100\n"
        with pytest.raises(ValidationError, match=r"line 10.*schedule\.N"):
            parse_config_text(text)

    def test_extraneous_window_rejected(self):
        text = MINIMAL + "schedule.K = 4\n"
        with pytest.raises(ValidationError, match=r"schedule\.K"):
            parse_config_text(text)

    def test_extraneous_real_data_mode_rejected(self):
        text = MINIMAL + "schedule.real_data_mode = fresh\n"
        with pytest.raises(ValidationError, match="real_data_mode"):
            parse_config_text(text)

    def test_unknown_real_data_mode_value(self):
        text = MINIMAL.replace("fully_synthetic", "randomly_sampled")
        text += "schedule.real_data_mode = stale\n"
        with pytest.raises(ValidationError, match="stale"):
            parse_config_text(text)

    def test_unknown_format_value(self):
        text = MINIMAL + "output.formats = csv,pdf\n"
        with pytest.raises(ValidationError, match="pdf"):
            parse_config_text(text)

    def test_non_integer_count_rejected(self):
        text = MINIMAL.replace("replicates = 100", "replicates = ten")
        with pytest.raises(ValidationError, match="replicates"):
            parse_config_text(text)

    def test_zero_replicates_rejected(self):
        text = MINIMAL.replace("replicates = 100", "replicates = 0")
        with pytest.raises(ValidationError, match="replicates"):
            parse_config_text(text)

    def test_vector_init(self):
        text = (
            "schedule.kind = fully_synthetic\n"
            "schedule.n = 5\n"
            "init.vector = 0.5, 0.3, 0.2\n"
            "max_generations = 10\n"
            "replicates = 3\n"
            "seed = 1\n"
        )
        cfg = parse_config_text(text)
        assert cfg.init.vector == (0.5, 0.3, 0.2)
        p0 = make_initial_distribution(cfg.init)
        assert np.allclose(p0.probs, [0.5, 0.3, 0.2])

    def test_vector_conflicts_with_triple(self):
        text = MINIMAL + "init.vector = 0.5,0.5\n"
        with pytest.raises(ValidationError, match="conflicts"):
            parse_config_text(text)

    def test_vector_must_be_numeric(self):
        text = (
            "schedule.kind = fully_synthetic\n"
            "schedule.n = 5\n"
            "init.vector = a,b\n"
            "max_generations = 10\n"
            "replicates = 3\n"
            "seed = 1\n"
        )
        with pytest.raises(ValidationError, match=r"line 3"):
            parse_config_text(text)

    def test_missing_init_entirely(self):
        text = (
            "schedule.kind = fully_synthetic\n"
            "schedule.n = 5\n"
            "max_generations = 10\n"
            "replicates = 3\n"
            "seed = 1\n"
        )
        with pytest.raises(ValidationError, match="init"):
            parse_config_text(text)

    def test_partial_triple_rejected(self):
        text = MINIMAL.replace("init.S0 = 0.38\n", "")
        with pytest.raises(ValidationError, match="init"):
            parse_config_text(text)


class TestParseConfigFile:
    def test_reads_from_path(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(MINIMAL, encoding="utf-8")
        cfg = parse_config(path)
        assert cfg.schedule.n == 20

    def test_missing_file(self, tmp_path):
        with pytest.raises(ValidationError, match="not found"):
            parse_config(tmp_path / "absent.cfg")


class TestOverride:
    def test_fields_replaced(self):
        cfg = parse_config_text(MINIMAL)
        new = cfg.override(seed=99, replicates=3, out_dir="elsewhere",
                           formats=("json",))
        assert (new.seed, new.replicates) == (99, 3)
        assert new.out_dir == "elsewhere"
        assert new.formats == ("json",)
        # Originals untouched; other fields carried over.
        assert cfg.seed == 7
        assert new.schedule == cfg.schedule and new.init == cfg.init

    def test_none_means_keep(self):
        cfg = parse_config_text(MINIMAL)
        same = cfg.override()
        assert same == cfg

    def test_invalid_override_rejected(self):
        cfg = parse_config_text(MINIMAL)
        with pytest.raises(ValidationError):
            cfg.override(replicates=0)


class TestResolvedForm:
    def test_items_sorted_and_complete(self):
        cfg = parse_config_text(SWEEP_STYLE)
        items = resolved_items(cfg)
        keys = [k for k, _ in items]
        assert keys == sorted(keys)
        assert ("schedule.K", "4") in items
        assert ("output.formats", "csv,json") in items

    def test_round_trip_triple_init(self):
        cfg = parse_config_text(MINIMAL)
        assert parse_config_text(resolved_text(cfg)) == cfg

    def test_round_trip_vector_init(self):
        text = (
            "schedule.kind = randomly_sampled\n"
            "schedule.n = 5\n"
            "init.vector = 0.1,0.2,0.7\n"
            "max_generations = 10\n"
            "replicates = 3\n"
            "seed = 1\n"
        )
        cfg = parse_config_text(text)
        assert parse_config_text(resolved_text(cfg)) == cfg

    def test_round_trip_window_schedule(self):
        cfg = parse_config_text(SWEEP_STYLE)
        assert parse_config_text(resolved_text(cfg)) == cfg


class TestConfigHash:
    def test_is_hex_sha256(self):
        h = config_hash(parse_config_text(MINIMAL))
        assert len(h) == 64
        assert set(h) <= set("0123456789abcdef")

    def test_output_keys_excluded(self):
        cfg = parse_config_text(MINIMAL)
        moved = cfg.override(out_dir="elsewhere", formats=("csv", "svg"))
        assert config_hash(moved) == config_hash(cfg)

    def test_seed_changes_hash(self):
        cfg = parse_config_text(MINIMAL)
        assert config_hash(cfg.override(seed=8)) != config_hash(cfg)

    def test_stable_across_calls(self):
        cfg = parse_config_text(SWEEP_STYLE)
        assert config_hash(cfg) == config_hash(parse_config_text(SWEEP_STYLE))


class TestInitSpecModes:
    def test_exactly_one_mode_required(self):
        with pytest.raises(ValidationError):
            InitSpec(vector=(0.5, 0.5), s=4, s_tilde=2, s0=0.5)
        with pytest.raises(ValidationError):
            InitSpec(vector=(0.5, 0.5), dirichlet_s=4)
        with pytest.raises(ValidationError):
            InitSpec()

    def test_partial_triple_rejected(self):
        with pytest.raises(ValidationError, match="requires all"):
            InitSpec(s=10, s_tilde=5)


class TestMakeInitialDistribution:
    def test_hits_support_and_sigma_targets(self):
        init = InitSpec(s=600, s_tilde=52, s0=0.1)
        p0 = make_initial_distribution(init)
        assert len(p0) == 600
        assert support_size(p0) == 52
        assert abs(sigma(p0) - 0.1) < 1e-12

    def test_uniform_at_lower_feasibility_edge(self):
        init = InitSpec(s=10, s_tilde=5, s0=0.2)
        p0 = make_initial_distribution(init)
        assert np.allclose(p0.probs[:5], 0.2)
        assert np.all(p0.probs[5:] == 0.0)

    def test_near_dirac(self):
        init = InitSpec(s=4, s_tilde=2, s0=0.9999)
        p0 = make_initial_distribution(init)
        assert abs(sigma(p0) - 0.9999) < 1e-10
        assert p0.probs.max() > 0.99

    def test_infeasible_targets(self):
        with pytest.raises(InfeasibleTarget):
            make_initial_distribution(InitSpec(s=10, s_tilde=5, s0=0.1))
        with pytest.raises(InfeasibleTarget):
            make_initial_distribution(InitSpec(s=10, s_tilde=5, s0=1.0))
        with pytest.raises(InfeasibleTarget):
            make_initial_distribution(InitSpec(s=10, s_tilde=1, s0=0.5))

    def test_support_exceeding_alphabet(self):
        with pytest.raises(ValidationError, match="exceeds"):
            make_initial_distribution(InitSpec(s=5, s_tilde=6, s0=0.3))

    def test_vector_mode_validates(self):
        p0 = make_initial_distribution(InitSpec(vector=(0.25, 0.75)))
        assert sigma(p0) == pytest.approx(0.625)

    def test_dirichlet_requires_rng(self):
        init = InitSpec(dirichlet_s=8)
        with pytest.raises(ValidationError, match="rng"):
            make_initial_distribution(init)
        p0 = make_initial_distribution(init, rng=make_rng(3))
        assert len(p0) == 8
        assert math.isclose(float(p0.probs.sum()), 1.0, abs_tol=1e-12)

    def test_sigma_sweep_accuracy(self):
        # The parametric builder should land on the requested overlap for a
        # spread of feasible targets, not just the documented showcase.
        for s0 in (0.05, 0.1, 0.25, 0.5, 0.9):
            init = InitSpec(s=64, s_tilde=30, s0=s0)
            p0 = make_initial_distribution(init)
            assert abs(sigma(p0) - s0) < 1e-6
            assert support_size(p0) == 30
