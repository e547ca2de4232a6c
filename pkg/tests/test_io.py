import json
import logging

import numpy as np
import pytest

from lorsmap import DataError, ModelFit, read_dataset, write_results
from lorsmap.io import read_matrix_tsv, write_matrix_tsv
from lorsmap.solvers import EqtlCall, SolverTrace


def write_tsv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(header) + "\n")
        for row in rows:
            fh.write("\t".join(str(v) for v in row) + "\n")


@pytest.fixture
def tsv_pair(tmp_path):
    expr = tmp_path / "expr.tsv"
    geno = tmp_path / "geno.tsv"
    write_tsv(expr, ["sample_id", "g1", "g2"], [["s1", 0.5, -1.0], ["s2", 1.5, 2.0], ["s3", 0.0, 1.0]])
    write_tsv(geno, ["sample_id", "snp1", "snp2"], [["s1", 0, 2], ["s2", 1, 1], ["s3", 2, 0]])
    return str(expr), str(geno)


class TestReadDataset:
    def test_matching_samples(self, tsv_pair):
        ds = read_dataset(*tsv_pair)
        assert ds.n == 3
        assert ds.gene_ids == ["g1", "g2"]
        assert ds.snp_ids == ["snp1", "snp2"]
        np.testing.assert_array_equal(ds.X[:, 0], [0.0, 1.0, 2.0])

    def test_genotype_imputation_uses_column_mean(self, tmp_path):
        expr = tmp_path / "e.tsv"
        geno = tmp_path / "g.tsv"
        write_tsv(expr, ["id", "g1"], [["s1", 1.0], ["s2", 2.0], ["s3", 3.0]])
        write_tsv(geno, ["id", "k1", "k2"], [["s1", "NA", 2], ["s2", 1, 1], ["s3", 2, "-9"]])
        ds = read_dataset(str(expr), str(geno))
        assert ds.X[0, 0] == pytest.approx(1.5)  # mean of observed 1, 2
        assert ds.X[2, 1] == pytest.approx(1.5)  # mean of observed 2, 1

    def test_sample_intersection_keeps_expression_order(self, tmp_path, caplog):
        expr = tmp_path / "e.tsv"
        geno = tmp_path / "g.tsv"
        write_tsv(expr, ["id", "g1"], [["s3", 3.0], ["s1", 1.0], ["s2", 2.0]])
        write_tsv(geno, ["id", "k1"], [["s1", 0], ["s3", 2]])
        with caplog.at_level(logging.WARNING, logger="lorsmap.io"):
            ds = read_dataset(str(expr), str(geno))
        assert ds.n == 2
        assert ds.sample_ids == ["s3", "s1"]
        np.testing.assert_array_equal(ds.Y[:, 0], [3.0, 1.0])
        np.testing.assert_array_equal(ds.X[:, 0], [2.0, 0.0])
        assert any("intersection" in rec.message for rec in caplog.records)

    def test_no_overlap_is_an_error(self, tmp_path):
        expr = tmp_path / "e.tsv"
        geno = tmp_path / "g.tsv"
        write_tsv(expr, ["id", "g1"], [["a", 1.0], ["b", 2.0]])
        write_tsv(geno, ["id", "k1"], [["c", 0], ["d", 2]])
        with pytest.raises(DataError, match="overlapping"):
            read_dataset(str(expr), str(geno))

    def test_missing_expression_is_an_error(self, tmp_path):
        expr = tmp_path / "e.tsv"
        geno = tmp_path / "g.tsv"
        write_tsv(expr, ["id", "g1"], [["s1", "NA"], ["s2", 2.0]])
        write_tsv(geno, ["id", "k1"], [["s1", 0], ["s2", 2]])
        with pytest.raises(DataError, match="expression"):
            read_dataset(str(expr), str(geno))

    def test_non_numeric_cell_has_diagnostics(self, tmp_path):
        path = tmp_path / "bad.tsv"
        write_tsv(path, ["id", "g1"], [["s1", 1.0], ["s2", "oops"]])
        with pytest.raises(DataError, match=r"bad\.tsv:3"):
            read_matrix_tsv(str(path))

    def test_ragged_row_has_diagnostics(self, tmp_path):
        path = tmp_path / "ragged.tsv"
        with open(path, "w") as fh:
            fh.write("id\tg1\tg2\n")
            fh.write("s1\t1.0\n")
        with pytest.raises(DataError, match=r"ragged\.tsv:2"):
            read_matrix_tsv(str(path))

    def test_duplicate_row_label_rejected(self, tmp_path):
        path = tmp_path / "dup.tsv"
        write_tsv(path, ["id", "g1"], [["s1", 1.0], ["s1", 2.0]])
        with pytest.raises(DataError, match="duplicate"):
            read_matrix_tsv(str(path))

    def test_missing_file_is_data_error(self, tmp_path):
        with pytest.raises(DataError):
            read_matrix_tsv(str(tmp_path / "nope.tsv"))


class TestMatrixRoundTrip:
    def test_read_write_read_idempotent(self, tmp_path, rng):
        values = rng.standard_normal((4, 3)) * np.exp(rng.uniform(-8, 8, size=(4, 3)))
        path = tmp_path / "m.tsv"
        rows = [f"r{i}" for i in range(4)]
        cols = [f"c{j}" for j in range(3)]
        write_matrix_tsv(str(path), values, rows, cols)
        r2, c2, v2 = read_matrix_tsv(str(path))
        assert (r2, c2) == (rows, cols)
        np.testing.assert_array_equal(v2, values)


def make_outputs(rng):
    fit = ModelFit(B=rng.standard_normal((4, 3)), L=rng.standard_normal((5, 3)), mu=rng.standard_normal(3))
    calls = [
        EqtlCall(snp_index=1, gene_index=2, snp_id="snp2", gene_id="g3", coefficient=-2.0),
        EqtlCall(snp_index=0, gene_index=0, snp_id="snp1", gene_id="g1", coefficient=0.5),
    ]
    trace = SolverTrace(
        objective_values=[10.0, 4.0, 3.5],
        rel_changes=[0.6, 0.125],
        step_kinds=["proximal", "fallback"],
        iterations=2,
        wall_time_seconds=0.01,
        converged=True,
    )
    timings = {"screening_seconds": 0.0, "tuning_seconds": 1.2, "modeling_seconds": 0.4, "total_seconds": 1.7}
    return fit, calls, trace, timings


class TestWriteResults:
    def test_all_artifacts_exist(self, tmp_path, rng):
        fit, calls, trace, timings = make_outputs(rng)
        paths = write_results(str(tmp_path), fit, calls, trace, timings, {"method": "fastlors"})
        for p in paths.values():
            assert open(p).read()

    def test_b_round_trips_exactly(self, tmp_path, rng):
        fit, calls, trace, timings = make_outputs(rng)
        paths = write_results(str(tmp_path), fit, calls, trace, timings, {})
        _, _, B = read_matrix_tsv(paths["B.tsv"])
        np.testing.assert_allclose(B, fit.B, atol=1e-12)

    def test_empty_call_list_writes_header_only(self, tmp_path, rng):
        fit, _, trace, timings = make_outputs(rng)
        paths = write_results(str(tmp_path), fit, [], trace, timings, {})
        lines = open(paths["eqtls.tsv"]).read().splitlines()
        assert lines == ["snp_id\tgene_id\tcoefficient"]

    def test_trace_has_initial_row(self, tmp_path, rng):
        fit, calls, trace, timings = make_outputs(rng)
        paths = write_results(str(tmp_path), fit, calls, trace, timings, {})
        lines = open(paths["trace.tsv"]).read().splitlines()
        assert len(lines) - 1 == trace.iterations + 1  # header + init + per-iteration
        assert lines[1].startswith("0\t10\tNA\tinit")

    def test_report_contents(self, tmp_path, rng):
        fit, calls, trace, timings = make_outputs(rng)
        config = {"method": "lors", "seed": 3}
        paths = write_results(str(tmp_path), fit, calls, trace, timings, config)
        report = json.load(open(paths["report.json"]))
        assert report["iterations"] == 2
        assert report["converged"] is True
        assert report["config"] == config
        assert report["timings"]["tuning_seconds"] == 1.2
        assert "version" in report
