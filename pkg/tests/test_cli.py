"""Command-line surface: subcommand wiring, exit codes, file outputs, and
the run-configuration log."""

from __future__ import annotations

import csv
import json
import stat

import pytest

from feast.cli import main
from feast.dataset import (
    write_catalog,
    write_feature_matrix,
    write_manifest,
    write_timing_table,
)
from feast.synthetic import SyntheticSpec, make_bundle


def write_bundle_files(bundle, root):
    root.mkdir(parents=True, exist_ok=True)
    paths = {
        "features": root / "features.csv",
        "timings": root / "timings.csv",
        "configs": root / "configs.csv",
        "manifest": root / "manifest.csv",
    }
    write_feature_matrix(bundle.features, bundle.manifest, paths["features"])
    write_timing_table(bundle.timings, paths["timings"])
    write_catalog(bundle.catalog, paths["configs"])
    write_manifest(bundle.manifest, paths["manifest"])
    return paths


def bundle_args(paths):
    return [
        "--features", str(paths["features"]),
        "--timings", str(paths["timings"]),
        "--configs", str(paths["configs"]),
        "--manifest", str(paths["manifest"]),
    ]


@pytest.fixture(scope="module")
def disk_bundle(tmp_path_factory):
    sb = make_bundle(
        SyntheticSpec(n_programs=12, n_features=8, n_true=3, n_configs=4, seed=3)
    )
    root = tmp_path_factory.mktemp("bundle")
    return sb, write_bundle_files(sb.bundle, root)


# --------------------------------------------------------------------------
# select
# --------------------------------------------------------------------------


def test_select_writes_M_rows_and_config_log(disk_bundle, tmp_path):
    _, paths = disk_bundle
    out = tmp_path / "sel"
    code = main(["select", *bundle_args(paths), "--M", "3",
                 "--out", str(out)])
    assert code == 0
    rows = list(csv.reader((out / "selection.csv").open()))
    assert rows[0] == ["method", "feature_id", "rank", "score", "category"]
    assert len(rows) == 4
    assert [r[2] for r in rows[1:]] == ["1", "2", "3"]

    log = json.loads((out / "run_config.json").read_text())
    cfg = log["config"]
    assert cfg["M"] == 3
    assert cfg["method"] == "lasso"  # default recorded explicitly
    assert cfg["folds"] == 3
    assert cfg["seed"] == 0
    assert "version" in log


def test_select_rejects_zero_M(disk_bundle, tmp_path):
    _, paths = disk_bundle
    code = main(["select", *bundle_args(paths), "--M", "0",
                 "--out", str(tmp_path / "x")])
    assert code == 2


def test_select_sfs_finds_the_planted_features(tmp_path):
    sb = make_bundle(
        SyntheticSpec(n_programs=30, n_features=8, n_true=2, n_configs=4, seed=11)
    )
    paths = write_bundle_files(sb.bundle, tmp_path / "b")
    out = tmp_path / "sel"
    code = main(["select", *bundle_args(paths), "--method", "sfs",
                 "--M", "2", "--out", str(out)])
    assert code == 0
    rows = list(csv.reader((out / "selection.csv").open()))
    picked = {r[1] for r in rows[1:]}
    assert picked <= set(sb.true_feature_ids)


def test_select_unknown_method_is_usage_error(disk_bundle, tmp_path):
    _, paths = disk_bundle
    code = main(["select", *bundle_args(paths), "--method", "pca",
                 "--out", str(tmp_path / "x")])
    assert code == 2


# --------------------------------------------------------------------------
# assign
# --------------------------------------------------------------------------


def test_assign_active_writes_plan_with_K_training_programs(disk_bundle, tmp_path):
    _, paths = disk_bundle
    out = tmp_path / "plan"
    code = main(["assign", *bundle_args(paths), "--scheme", "active",
                 "--K", "5", "--M", "3", "--out", str(out)])
    assert code == 0
    doc = json.loads((out / "plan.json").read_text())
    assert doc["scheme"] == "active"
    assert len(doc["training_ids"]) == 5
    assert len(doc["assignments"]) == 12 - 5


def test_assign_passive_with_unknown_training_id(disk_bundle, tmp_path, capsys):
    _, paths = disk_bundle
    code = main(["assign", *bundle_args(paths), "--scheme", "passive",
                 "--train", "prog001,c", "--out", str(tmp_path / "x")])
    assert code == 2
    assert "'c'" in capsys.readouterr().err


def test_assign_scheme_flag_requirements(disk_bundle, tmp_path, capsys):
    _, paths = disk_bundle
    assert main(["assign", *bundle_args(paths), "--scheme", "active",
                 "--out", str(tmp_path / "a")]) == 2
    assert "--K" in capsys.readouterr().err
    assert main(["assign", *bundle_args(paths), "--scheme", "passive",
                 "--out", str(tmp_path / "b")]) == 2
    assert "--train" in capsys.readouterr().err


# --------------------------------------------------------------------------
# evaluate
# --------------------------------------------------------------------------


def test_evaluate_report_and_tr_rows(disk_bundle, tmp_path):
    _, paths = disk_bundle
    plan_dir = tmp_path / "plan"
    assert main(["assign", *bundle_args(paths), "--scheme", "active",
                 "--K", "4", "--M", "3", "--out", str(plan_dir)]) == 0
    out = tmp_path / "eval"
    code = main(["evaluate", *bundle_args(paths),
                 "--plan", str(plan_dir / "plan.json"),
                 "--nexec", "1,100", "--out", str(out)])
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    rows = list(csv.reader((out / "tr.csv").open()))
    assert rows[0] == ["Nexec", "TR"]
    gain = report["T_null"] - report["T_auto"]["all_programs"]
    for row, ne in zip(rows[1:], (1, 100)):
        assert int(row[0]) == ne
        assert float(row[1]) == pytest.approx(
            ne * gain - report["T_exhaustive_K"], rel=1e-12
        )


def test_evaluate_missing_plan_file(disk_bundle, tmp_path):
    _, paths = disk_bundle
    code = main(["evaluate", *bundle_args(paths),
                 "--plan", str(tmp_path / "nope.json"),
                 "--out", str(tmp_path / "x")])
    assert code == 2


# --------------------------------------------------------------------------
# sweep
# --------------------------------------------------------------------------


def test_sweep_writes_both_csvs(disk_bundle, tmp_path):
    _, paths = disk_bundle
    out = tmp_path / "sweep"
    code = main(["sweep", *bundle_args(paths), "--scheme", "passive",
                 "--method", "all_features", "--K", "2,4", "--trials", "3",
                 "--M", "3", "--out", str(out)])
    assert code == 0
    srows = list(csv.reader((out / "sweep.csv").open()))
    assert srows[0] == ["K", "mean_T_auto", "std_T_auto", "trials"]
    assert [r[0] for r in srows[1:]] == ["2", "4"]
    assert all(r[3] == "3" for r in srows[1:])
    grows = list(csv.reader((out / "trgrid.csv").open()))
    assert grows[0] == ["K", "Nexec", "TR"]
    # default Nexec grid: 1, 10, 100, 1000 for each K
    assert len(grows) == 1 + 2 * 4
    assert [r[1] for r in grows[1:5]] == ["1", "10", "100", "1000"]


# --------------------------------------------------------------------------
# measure
# --------------------------------------------------------------------------


@pytest.fixture
def fake_cc(tmp_path):
    script = tmp_path / "fakecc.sh"
    script.write_text(
        "#!/bin/sh\n"
        'prev=""\n'
        'for a in "$@"; do\n'
        '  if [ "$prev" = "-o" ]; then\n'
        '    printf "#!/bin/sh\\nexit 0\\n" > "$a"\n'
        '    chmod +x "$a"\n'
        "  fi\n"
        '  prev="$a"\n'
        "done\n"
        "exit 0\n"
    )
    script.chmod(script.stat().st_mode | stat.S_IEXEC)
    return script


def write_measure_inputs(tmp_path, template_tool):
    src = tmp_path / "prog.c"
    src.write_text("int main(void){return 0;}\n")
    plan = tmp_path / "plan.toml"
    plan.write_text(
        f'template = "{template_tool} {{flags}} -o {{output}} {{source}}"\n'
        "repetitions = 2\n"
        'statistic = "min"\n'
        "[[program]]\n"
        f'id = "prog"\nsource = "{src}"\n'
    )
    configs = tmp_path / "configs.csv"
    configs.write_text("config_id,flags\nnull,\nfast,-O2\n")
    return plan, configs


def test_measure_subcommand_end_to_end(fake_cc, tmp_path):
    plan, configs = write_measure_inputs(tmp_path, fake_cc)
    out = tmp_path / "meas"
    code = main(["measure", "--plan", str(plan), "--configs", str(configs),
                 "--out", str(out)])
    assert code == 0
    rows = list(csv.reader((out / "timings.csv").open()))
    assert len(rows) == 3  # header + 2 configs x 1 program
    # resuming a complete plan still succeeds and changes nothing
    before = (out / "timings.csv").read_text()
    assert main(["measure", "--plan", str(plan), "--configs", str(configs),
                 "--out", str(out)]) == 0
    assert (out / "timings.csv").read_text() == before


def test_measure_failures_exit_nonzero(tmp_path):
    bad = tmp_path / "badcc.sh"
    bad.write_text("#!/bin/sh\necho boom >&2\nexit 1\n")
    bad.chmod(bad.stat().st_mode | stat.S_IEXEC)
    plan, configs = write_measure_inputs(tmp_path, bad)
    out = tmp_path / "meas"
    code = main(["measure", "--plan", str(plan), "--configs", str(configs),
                 "--out", str(out)])
    assert code == 1
    frows = list(csv.reader((out / "failures.csv").open()))
    assert len(frows) == 3  # header + both cells quarantined


# --------------------------------------------------------------------------
# cluster
# --------------------------------------------------------------------------


def test_cluster_subcommand(disk_bundle, tmp_path):
    _, paths = disk_bundle
    out = tmp_path / "clus"
    code = main(["cluster", "--features", str(paths["features"]),
                 "--manifest", str(paths["manifest"]),
                 "--K", "3", "--out", str(out)])
    assert code == 0
    rows = list(csv.reader((out / "clusters.csv").open()))
    assert rows[0] == ["program_id", "cluster_id", "is_medoid"]
    assert len(rows) == 13
    assert sum(int(r[2]) for r in rows[1:]) == 3
    assert {r[1] for r in rows[1:]} == {"0", "1", "2"}


# --------------------------------------------------------------------------
# top-level behavior
# --------------------------------------------------------------------------


def test_no_subcommand_is_usage_error():
    assert main([]) == 2


def test_unknown_subcommand_is_usage_error():
    assert main(["frobnicate"]) == 2


def test_version_flag_exits_zero(capsys):
    assert main(["--version"]) == 0
    assert "feast" in capsys.readouterr().out


def test_missing_input_file_is_validation_error(tmp_path):
    code = main(["select",
                 "--features", str(tmp_path / "none.csv"),
                 "--timings", str(tmp_path / "none2.csv"),
                 "--configs", str(tmp_path / "none3.csv"),
                 "--out", str(tmp_path / "x")])
    assert code == 2
