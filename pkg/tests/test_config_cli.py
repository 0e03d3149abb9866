import io
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from partimax import cli
from partimax import config as cfgmod
from partimax.config import RunConfig
from partimax.simulate import COLUMNS

DATA = Path(__file__).parent / "data"

HEADER = ("algorithm,k,r,people,seed,trajectory_id,correct_predictions,timesteps,"
          "mean_selection_time_us,gain_evaluations,boxes_fraction")

MINIMAL = """
[run]
mode = bench
timing = false

[sweep]
algorithms = greedy
k_values = 2
people = 1
seeds = 0
timesteps = 5

[tiling]
image_width = 100
image_height = 30
box_width = 60
box_height = 60
offset_x = 30
offset_y = 20

[filter]
m = 30
"""


def test_defaults_round_trip():
    assert cfgmod.loads(cfgmod.dumps(RunConfig())) == RunConfig()


def test_empty_text_gives_defaults():
    assert cfgmod.loads("") == RunConfig()


small_ints = st.integers(0, 50)


@st.composite
def run_configs(draw):
    cfg = RunConfig()
    cfg = cfg.replace("sweep",
                      algorithms=tuple(draw(st.lists(st.sampled_from(["greedy", "sgm", "partimax", "brute", "none"]),
                                                     max_size=4, unique=True))),
                      k_values=tuple(draw(st.lists(small_ints, min_size=1, max_size=3))),
                      seeds=tuple(draw(st.lists(small_ints, min_size=1, max_size=4))),
                      max_rejects=draw(st.none() | st.integers(1000, 5000)),
                      time_budget=draw(st.none() | st.floats(0, 1, allow_nan=False)))
    cfg = cfg.replace("motion", sigma_x=draw(st.floats(0, 20, allow_nan=False)))
    cfg = cfg.replace("detector", p_detect=draw(st.floats(0.5, 1.0)), p_false=draw(st.floats(0, 0.4)))
    cfg = cfg.replace("filter", m=draw(st.integers(1, 500)), inject_fraction=draw(st.floats(0, 1)))
    cfg = cfg.replace("run", timing=draw(st.booleans()), out=draw(st.sampled_from(["a.csv", "out/x y.csv"])),
                      suites=tuple(draw(st.lists(st.sampled_from(["nemhauser", "partimax"]), max_size=2, unique=True))))
    cfg = cfg.replace("select", algorithm=draw(st.sampled_from(["greedy", "partimax", "sgm"])), seed=draw(small_ints))
    return cfg


@given(run_configs())
def test_round_trip_property(cfg):
    once = cfgmod.loads(cfgmod.dumps(cfg))
    assert once == cfg
    assert cfgmod.dumps(once) == cfgmod.dumps(cfg)


@pytest.mark.parametrize("text,match", [
    ("[bogus]\nx = 1\n", "unknown sections"),
    ("[run]\ncolour = red\n", "unknown key"),
    ("[run]\nmode = train\n", "mode"),
    ("[filter]\nm = 0\n", "m must be positive"),
    ("[filter]\nm = many\n", "m:"),
    ("[sweep]\nalgorithms = greedy, lazy\n", "unknown algorithms"),
    ("[tiling]\noffset_x = 70\n", "tiling"),
    ("[run]\ntiming = maybe\n", "boolean"),
    ("not an ini", "section"),
])
def test_bad_configs_rejected(text, match):
    with pytest.raises(cfgmod.ConfigError, match=match):
        cfgmod.loads(text)


def test_minimal_bench_writes_two_lines(tmp_path):
    conf = tmp_path / "run.ini"
    conf.write_text(MINIMAL)
    out = tmp_path / "out.csv"
    assert cli.main(["--config", str(conf), "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 2
    assert lines[0] == HEADER
    assert lines[1].startswith("greedy,2,0,1,0,0,")


def test_golden_header():
    assert ",".join(COLUMNS) == HEADER


def test_bench_is_byte_identical(tmp_path):
    conf = tmp_path / "run.ini"
    conf.write_text(MINIMAL.replace("seeds = 0", "seeds = 0, 1").replace("algorithms = greedy",
                                                                        "algorithms = greedy, partimax, none"))
    outs = []
    for name in ("a.csv", "b.csv"):
        assert cli.main(["--config", str(conf), "--out", str(tmp_path / name)]) == 0
        outs.append((tmp_path / name).read_bytes())
    assert outs[0] == outs[1]
    assert len(outs[0].splitlines()) == 7


def test_bench_budget_larger_than_box_count(tmp_path, capsys):
    conf = tmp_path / "run.ini"
    conf.write_text(MINIMAL.replace("k_values = 2", "k_values = 2, 21"))
    assert cli.main(["--config", str(conf), "--out", str(tmp_path / "o.csv")]) == 2
    assert "exceed" in capsys.readouterr().err


def test_unwritable_output_is_usage_error(tmp_path):
    conf = tmp_path / "run.ini"
    conf.write_text(MINIMAL)
    assert cli.main(["--config", str(conf), "--out", str(tmp_path / "missing" / "x.csv")]) == 2


def test_exit_codes(tmp_path, capsys):
    assert cli.main(["--config", str(tmp_path / "none.ini")]) == 2
    bad = tmp_path / "bad.ini"
    bad.write_text("[run]\nfoo = 1\n")
    assert cli.main(["--config", str(bad)]) == 2
    assert "unknown key" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        cli.main(["--mode", "train"])
    assert exc.value.code == 2


def test_seed_flag_overrides_everything():
    args = cli.build_parser().parse_args(["--seed", "9"])
    cfg = cli.effective_config(args)
    assert cfg.sweep.seeds == (9,)
    assert cfg.select.seed == 9
    assert cfg.verify.seed == 9


def test_dump_config(capsys):
    assert cli.main(["--dump-config", "--mode", "select"]) == 0
    text = capsys.readouterr().out
    assert cfgmod.loads(text).run.mode == "select"


def test_verify_suite_filter(capsys):
    assert cli.main(["--mode", "verify", "--suite", "nemhauser"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 1
    assert lines[0].startswith("PASS nemhauser")


def test_verify_negative_control_fails(capsys):
    cfg = RunConfig().replace("run", mode="verify", suites=("proportionality",))
    assert cli.cmd_verify(cfg, uniform_boxes=True) == 1
    assert capsys.readouterr().out.startswith("FAIL proportionality")


def test_select_golden_fixture():
    cfg = RunConfig().replace("run", mode="select", belief=str(DATA / "particles_250.csv"))
    buf = io.StringIO()
    assert cli.cmd_select(cfg, buf) == 0
    assert buf.getvalue() == (DATA / "particles_250.expected").read_text()


def test_select_single_particle(tmp_path, full_coder):
    f = tmp_path / "one.csv"
    f.write_text("1000.5,700.25,0,0\n")
    cfg = RunConfig().replace("run", mode="select", belief=str(f)).replace("select", k=1)
    buf = io.StringIO()
    assert cli.cmd_select(cfg, buf) == 0
    boxes, score = buf.getvalue().splitlines()
    assert int(boxes) in full_coder.covers((1000.5, 700.25))
    assert score == "pcf 1"


@pytest.mark.parametrize("content,fragment", [
    ("x,y,vx,vy\n1,2,3,4\n5,6,seven,8\n", ":3:"),
    ("1,2,3\n", ":1:"),
    ("1,2,3,4\n1,2,nan,4\n", ":2:"),
    ("", "at least one particle"),
    ("x,y,vx,vy\n", "at least one particle"),
])
def test_malformed_belief_files(tmp_path, capsys, content, fragment):
    f = tmp_path / "b.csv"
    f.write_text(content)
    assert cli.main(["--mode", "select", "--belief", str(f)]) == 2
    assert fragment in capsys.readouterr().err


def test_select_without_belief_file(capsys):
    assert cli.main(["--mode", "select"]) == 2
    assert cli.main(["--mode", "select", "--belief", "/nonexistent.csv"]) == 2


def test_select_budget_larger_than_box_count(tmp_path, capsys):
    f = tmp_path / "b.csv"
    f.write_text("1,1,0,0\n")
    conf = tmp_path / "c.ini"
    conf.write_text("[tiling]\nimage_width = 100\nimage_height = 100\nbox_width = 100\nbox_height = 100\n"
                    "offset_x = 100\noffset_y = 100\n[select]\nk = 40\n")
    assert cli.main(["--config", str(conf), "--mode", "select", "--belief", str(f)]) == 2
    assert "exceeds the number of boxes" in capsys.readouterr().err
