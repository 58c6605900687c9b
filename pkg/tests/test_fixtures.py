import math

import numpy as np
import pytest

from axoprune.axmodel import apply_config, enumerate_configs
from axoprune.behav import Exact, NetlistFunctional, characterize_behav
from axoprune.errors import SpaceTooLarge
from axoprune.fixtures import (FIR_SIGNAL, FIR_TAPS, GRADIENT_PGM, IMPORTED_PPA, SAMPLE_LIBRARY,
                               build_fixture_files, fir_signal, fir_taps, fixture_path,
                               gradient_image, oracle_behav, oracle_fir)
from axoprune.opgen import OperatorSpec
from axoprune.ppa import import_ppa
from axoprune.storage import load_library

INTEGER_FIELDS = ("max_abs_err",)
RATIONAL_FIELDS = ("avg_abs_err", "err_prob", "mse")


def assert_agree(lib, ref):
    for f in INTEGER_FIELDS + RATIONAL_FIELDS:
        assert getattr(lib, f) == ref[f], f
    assert math.isclose(lib.avg_rel_err, ref["avg_rel_err"], rel_tol=1e-12, abs_tol=0)


def test_oracle_hand_values():
    m = oracle_behav(OperatorSpec.uadd(4), "0000").metrics
    assert m["avg_abs_err"] == 15.0 and m["err_prob"] == 255 / 256 and m["max_abs_err"] == 30
    m = oracle_behav(OperatorSpec.uadd(4), "1111").metrics
    assert set(m.values()) == {0.0}
    m = oracle_behav(OperatorSpec.smul(2, 2), "1111").metrics
    assert set(m.values()) == {0.0}


def test_adder_space_agrees(adder4):
    spec, base = adder4
    for cfg in enumerate_configs(4):
        lib = characterize_behav(NetlistFunctional(spec, apply_config(base, cfg)), Exact(spec))
        assert_agree(lib, oracle_behav(spec, cfg).metrics)


def test_multiplier_configs_agree(mul4):
    spec, base = mul4
    rng = np.random.default_rng(2024)
    for _ in range(64):
        cfg = "".join(rng.choice(["0", "1"], 13))
        lib = characterize_behav(NetlistFunctional(spec, apply_config(base, cfg)), Exact(spec))
        assert_agree(lib, oracle_behav(spec, cfg, netlist=base).metrics)


def test_tie_high_agrees(adder4):
    spec, base = adder4
    for cfg in ("0110", "1000"):
        lib = characterize_behav(NetlistFunctional(spec, apply_config(base, cfg, tie=1)), Exact(spec))
        assert_agree(lib, oracle_behav(spec, cfg, tie=1).metrics)


def test_oracle_cap():
    with pytest.raises(SpaceTooLarge):
        oracle_behav(OperatorSpec.uadd(11), "1" * 11)


def test_oracle_fir():
    assert oracle_fir([1, 2], [3, 4, 5]) == [3, 10, 13]


def test_bundled_files_load():
    for name in (FIR_SIGNAL, FIR_TAPS, GRADIENT_PGM, IMPORTED_PPA, SAMPLE_LIBRARY):
        assert fixture_path(name).is_file()
    taps = fir_taps()
    assert taps == taps[::-1] and len(taps) == 15
    assert len(fir_signal()) == 256
    img, peak = gradient_image()
    assert img.shape == (64, 64) and peak == 127 and img[63, 63] == 126
    rec = import_ppa(fixture_path(IMPORTED_PPA))
    assert set(rec) == {"1111", "0111", "0011", "0001", "0000"}
    lib = load_library(fixture_path(SAMPLE_LIBRARY))
    assert len(lib) == 16


def test_bundled_files_regenerate_identically(tmp_path):
    build_fixture_files(tmp_path)
    for name in (FIR_SIGNAL, FIR_TAPS, GRADIENT_PGM, IMPORTED_PPA, SAMPLE_LIBRARY):
        assert (tmp_path / name).read_bytes() == fixture_path(name).read_bytes(), name
