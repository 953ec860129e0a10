"""
Tests for src.utils: settings parsing, the thread bound and strategy discovery.
"""
from multiprocessing import cpu_count

import numpy as np
import pandas as pd
import pytest

import src.utils as utils
from src.errors import InvalidArgumentError

ATOL = 1e-12


class TestParseComplex:
    @pytest.mark.parametrize("text, expected", [
        ("0,0.5", 0.5j),
        ("1.25", 1.25 + 0j),
        (" -2 , 3 ", -2 + 3j),
        ("1e-3,0", 1e-3 + 0j),
    ])
    def test_accepts(self, text, expected):
        assert utils.parse_complex(text) == expected

    @pytest.mark.parametrize("text", ["a,b", "1,2,3", "", "i"])
    def test_rejects(self, text):
        with pytest.raises(InvalidArgumentError):
            utils.parse_complex(text)

    def test_rejection_is_a_value_error(self):
        with pytest.raises(ValueError):
            utils.parse_complex("nope")


class TestParseRange:
    def test_inclusive_stop(self):
        np.testing.assert_allclose(utils.parse_range("0:1:0.25"), [0.0, 0.25, 0.5, 0.75, 1.0],
                                   atol=ATOL)

    def test_symmetric_range_count(self):
        values = utils.parse_range("-1:1:0.1")
        assert values.size == 21
        assert values[0] == pytest.approx(-1.0)
        assert values[-1] == pytest.approx(1.0)

    def test_single_point(self):
        np.testing.assert_array_equal(utils.parse_range("0.3"), [0.3])

    @pytest.mark.parametrize("text", ["1:0:0.1", "0:1:0", "0:1:-0.5", "0:1", "x:1:0.1"])
    def test_rejects(self, text):
        with pytest.raises(InvalidArgumentError):
            utils.parse_range(text)


class TestThreadBound:
    def test_default_is_cpu_count(self, monkeypatch):
        monkeypatch.delenv(utils.THREADS_ENV, raising=False)
        assert utils.n_jobs() == cpu_count()

    def test_explicit_value(self, monkeypatch):
        monkeypatch.setenv(utils.THREADS_ENV, "3")
        assert utils.n_jobs() == 3

    def test_floor_at_one(self, monkeypatch):
        monkeypatch.setenv(utils.THREADS_ENV, "0")
        assert utils.n_jobs() == 1

    def test_garbage_falls_back(self, monkeypatch):
        monkeypatch.setenv(utils.THREADS_ENV, "many")
        assert utils.n_jobs() == cpu_count()


class TestStrategies:
    def test_discovery(self):
        methods = utils.create_methods_list()
        assert set(methods) == {"broadcasting_method", "nested_loop_method", "parallel_method"}
        for module in methods.values():
            assert callable(module.setup) and callable(module.process) and callable(module.run)

    def test_default_strategy(self, monkeypatch):
        monkeypatch.delenv(utils.ASSEMBLY_ENV, raising=False)
        assert utils.assembly_method().__name__ == f"src.methods.{utils.DEFAULT_ASSEMBLY}"

    def test_environment_selects_strategy(self, monkeypatch):
        monkeypatch.setenv(utils.ASSEMBLY_ENV, "nested_loop_method")
        assert utils.assembly_method().__name__ == "src.methods.nested_loop_method"

    def test_unknown_strategy(self):
        with pytest.raises(InvalidArgumentError):
            utils.assembly_method("no_such_method")


class TestCsv:
    def test_kernel_frame_layout(self):
        nodes = np.array([-0.5, 0.5])
        values = np.array([[1 + 1j, 2], [3, 4 - 2j]])
        frame = utils.kernel_frame(nodes, values)
        assert list(frame.columns) == ["x", "y", "re", "im"]
        assert len(frame) == 4
        # row-major: (x0, y0), (x0, y1), ...
        np.testing.assert_array_equal(frame["y"].to_numpy(), [-0.5, 0.5, -0.5, 0.5])
        np.testing.assert_array_equal(frame["re"].to_numpy(), [1, 2, 3, 4])
        np.testing.assert_array_equal(frame["im"].to_numpy(), [1, 0, 0, -2])

    def test_write_creates_directories(self, tmp_path):
        path = tmp_path / "nested" / "kernel.csv"
        frame = pd.DataFrame({"x": [0.1], "value": [np.pi]})
        utils.write_csv(frame, path)
        back = pd.read_csv(path)
        assert back["value"].iloc[0] == pytest.approx(np.pi, abs=0)
