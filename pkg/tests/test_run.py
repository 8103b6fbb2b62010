"""
Unit tests for command-line runner module
"""

import pytest

from noisypop.files import read_population, read_report, read_samples
from noisypop.run import EXIT_INPUT_ERROR, EXIT_OK, EXIT_RECOVERY_FAILURE, build_parser, main

POPULATION = "n=8 k=2 mu=0.9\n00000000 0.6\n11111111 0.4\n"

# the far point sits at weight 8, far above r
SMALL_RUN = ["--delta", "0.3", "--eta", "0.1", "--r", "3"]


@pytest.fixture
def population(tmp_path):
    path = tmp_path / "pop.txt"
    path.write_text(POPULATION)
    return path


def test_parser_defaults():
    args = build_parser().parse_args(["recover", "--population", "p.txt"])
    assert args.epsilon == 0.1
    assert args.kappa == 0.05
    assert args.format == "json"
    assert not args.exact


def test_gen_is_deterministic(tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    assert main(["gen", "--n", "10", "--k", "4", "--seed", "5", "--output", str(a)]) == EXIT_OK
    assert main(["gen", "--n", "10", "--k", "4", "--seed", "5", "--output", str(b)]) == EXIT_OK
    assert a.read_text() == b.read_text()


def test_gen_uniform_profile(tmp_path):
    path = tmp_path / "pop.txt"
    assert main(["gen", "--n", "6", "--k", "4", "--profile", "uniform", "--mu", "0.5", "--output", str(path)]) == EXIT_OK
    pop = read_population(path)
    assert pop.mu == 0.5
    assert [w for _, w in pop.rows] == [0.25] * 4


def test_gen_rejects_oversized_support(tmp_path, capsys):
    code = main(["gen", "--n", "2", "--k", "5", "--output", str(tmp_path / "pop.txt")])
    assert code == EXIT_INPUT_ERROR
    assert "Input error" in capsys.readouterr().err


def test_sample_writes_count(population, tmp_path):
    out = tmp_path / "samples.txt"
    assert main(["sample", "--population", str(population), "--count", "50", "--seed", "1", "--output", str(out)]) == EXIT_OK
    source = read_samples(out)
    assert source.remaining == 50
    assert source.mu == 0.9


def test_recover_exact(population, tmp_path, capsys):
    out = tmp_path / "report.json"
    code = main(["recover", "--population", str(population), "--exact", "--output", str(out)] + SMALL_RUN)
    assert code == EXIT_OK
    report = read_report(out)
    assert report.backend == "exact"
    assert [row.point for row in report.points] == ["00000000", "11111111"]
    for row in report.points:
        assert abs(row.estimate - row.truth) <= 0.05
    assert "Recovered 2 of 2 points" in capsys.readouterr().out


def test_recover_csv_output(population, tmp_path):
    out = tmp_path / "report.csv"
    code = main(
        ["recover", "--population", str(population), "--exact", "--format", "csv", "--output", str(out)] + SMALL_RUN
    )
    assert code == EXIT_OK
    assert out.read_text().startswith("point,estimate,normalized,truth")


def test_recover_needs_enough_samples(population, tmp_path, capsys):
    samples = tmp_path / "samples.txt"
    main(["sample", "--population", str(population), "--count", "10", "--output", str(samples)])
    code = main(["recover", "--population", str(population), "--samples", str(samples)] + SMALL_RUN)
    assert code == EXIT_INPUT_ERROR
    err = capsys.readouterr().err
    assert "M =" in err
    assert "the file has 10" in err


def test_recover_without_mu(tmp_path):
    path = tmp_path / "pop.txt"
    path.write_text("n=4 k=1\n0000 1.0\n")
    assert main(["recover", "--population", str(path)]) == EXIT_INPUT_ERROR


def test_recover_rejects_bad_epsilon(population):
    assert main(["recover", "--population", str(population), "--epsilon", "1.5"]) == EXIT_INPUT_ERROR


def test_verify_small(capsys):
    assert main(["verify", "--n", "6", "--seed", "2"]) == EXIT_OK
    assert "8 of 8 checks passed" in capsys.readouterr().out


def test_recover_refuses_huge_budget(tmp_path, capsys):
    path = tmp_path / "pop.txt"
    path.write_text("n=8 k=2 mu=0.2\n00000000 0.5\n11110000 0.5\n")
    code = main(["recover", "--population", str(path), "--construction", "ell0", "--output", str(tmp_path / "r.json")])
    assert code == EXIT_INPUT_ERROR
    err = capsys.readouterr().err
    assert "Sample budget too large" in err
    assert "--sample-cap" in err


def test_recover_gap_policy_fail(tmp_path):
    path = tmp_path / "pop.txt"
    path.write_text("n=6 k=2 mu=1.0\n000000 0.5\n100000 0.5\n")
    out = tmp_path / "r.json"
    code = main(["recover", "--population", str(path), "--exact", "--r", "0", "--gap-policy", "fail", "--output", str(out)])
    assert code == EXIT_RECOVERY_FAILURE
    assert read_report(out).failures == 2
