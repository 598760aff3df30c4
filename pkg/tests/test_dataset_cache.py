"""
Tests for dataset cache files
"""

import pytest
import sys
import os

import numpy as np

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.benchmarks import (
    BenchmarkError,
    generate_dataset,
    get_benchmark,
    load_dataset,
    load_or_generate,
    save_dataset
)


class TestDatasetCache:
    """Test reading and writing raw samples"""

    def setup_method(self):
        self.bench = get_benchmark("feynman-I.37.4")
        self.data = generate_dataset(self.bench, 64, seed=9)

    def test_bit_identical_reload(self, tmp_path):
        path = save_dataset(tmp_path / "data.bin", self.bench, self.data)
        loaded, header = load_dataset(path)
        assert header["count"] == 64
        assert header["seed"] == 9
        assert loaded.inputs.tobytes() == self.data.inputs.tobytes()
        assert loaded.targets.tobytes() == self.data.targets.tobytes()

    def test_load_or_generate_reuses_file(self, tmp_path):
        path = tmp_path / "cache.bin"
        first = load_or_generate(path, self.bench, 64, 9)
        stamp = path.stat().st_mtime_ns
        second = load_or_generate(path, self.bench, 64, 9)
        assert path.stat().st_mtime_ns == stamp
        assert np.array_equal(first.targets, second.targets)

    def test_mismatched_header_regenerates(self, tmp_path):
        path = save_dataset(tmp_path / "cache.bin", self.bench, self.data)
        fresh = load_or_generate(path, self.bench, 32, 9)
        assert len(fresh) == 32
        assert load_dataset(path)[1]["count"] == 32

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"NOTDATA!" + bytes(16))
        with pytest.raises(BenchmarkError):
            load_dataset(path)

    def test_truncated(self, tmp_path):
        path = save_dataset(tmp_path / "data.bin", self.bench, self.data)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(BenchmarkError):
            load_dataset(path)


if __name__ == "__main__":
    pytest.main([__file__])
