import pytest
from hypothesis import given, settings

from unrel.config import RecursionConfig, load_config, parse_config_text
from unrel.generators import FAMILIES, cycle, dumbbell, generate, parse_family, random_regular, theta
from unrel.graph import GraphInputError, min_cut
from unrel.graphio import GraphParseError, format_graph, parse_graph, parse_graph_text

from test_graph import small_graphs


class TestParse:
    def test_triangle(self):
        g = parse_graph_text("p 3 3\n0 1\n1 2\n0 2\n")
        assert g.n == 3 and g.m == 3 and min_cut(g)[0] == 2

    def test_duplicates_accumulate(self):
        g = parse_graph_text("p 2 3\n0 1\n0 1\n1 0\n")
        assert g.num_bundles == 1 and g.w.tolist() == [3]

    def test_out_of_range_reports_line(self):
        with pytest.raises(GraphParseError) as err:
            parse_graph_text("p 3 1\nc comment\n0 3\n")
        assert err.value.lineno == 3

    @pytest.mark.parametrize("text", ["0 1\n", "p 3 1\n0 x\n", "p 3 1\n1 1\n", "p 3 1\n0 1 0\n", "p 3 1\n0 1 2 3\n"])
    def test_malformed(self, text):
        with pytest.raises(GraphInputError):
            parse_graph_text(text)

    def test_dimacs_header_and_path(self, tmp_path):
        f = tmp_path / "g.txt"
        f.write_text("p edge 3 2\ne 0 1\ne 1 2\n")
        g = parse_graph(f)
        assert g.n == 3 and g.m == 2
        assert parse_graph(str(f)).fingerprint() == g.fingerprint()

    @given(small_graphs(7))
    @settings(max_examples=50, deadline=None)
    def test_round_trip(self, g):
        h = parse_graph_text(format_graph(g))
        assert h.fingerprint() == g.fingerprint()


class TestGenerators:
    def test_cycle(self):
        g = generate("cycle", {"n": 5})
        assert g.n == 5 and min_cut(g)[0] == 2

    def test_dumbbell_cut(self):
        g = dumbbell(6, 3)
        lam, side = min_cut(g)
        assert lam == 3
        assert set(side) in (set(range(6)), set(range(6, 12)))

    def test_random_regular_deterministic(self):
        a = random_regular(100, 4, seed=9)
        assert a.fingerprint() == random_regular(100, 4, seed=9).fingerprint()
        assert a.fingerprint() != random_regular(100, 4, seed=10).fingerprint()
        assert set(a.degrees().tolist()) == {4}

    def test_theta(self):
        g = theta(3, 2)
        assert g.n == 2 + 3 * 1 and min_cut(g)[0] == 2

    def test_parse_family(self):
        assert parse_family("dumbbell:k=6,b=3") == ("dumbbell", {"k": "6", "b": "3"})
        g = generate(*parse_family("random_regular:n=10,d=3"), seed=1)
        assert g.n == 10

    @pytest.mark.parametrize("family", FAMILIES)
    def test_every_family_connected(self, family):
        params = {"n": 8, "k": 4, "b": 2, "d": 3, "pe": 0.5, "paths": 3, "length": 3}
        assert generate(family, params, seed=2).is_connected()

    def test_errors(self):
        with pytest.raises(GraphInputError):
            generate("nope", {})
        with pytest.raises(GraphInputError):
            generate("dumbbell", {"k": 4})
        with pytest.raises(GraphInputError):
            cycle(2)


class TestConfig:
    def test_defaults(self):
        cfg = load_config(env={})
        assert cfg == RecursionConfig()
        assert cfg.n0 == 13 and cfg.surrogate_slack == 8.0

    def test_file_env_override_order(self, tmp_path):
        f = tmp_path / "run.cfg"
        f.write_text("# comment\nn0 = 10\nc_R=2.5\ndelta=\n")
        cfg = load_config(f, env={"UNREL_N0": "11", "UNREL_SEED": "4"}, seed=7)
        assert cfg.n0 == 11 and cfg.c_R == 2.5 and cfg.delta is None and cfg.seed == 7

    def test_bad_entries(self):
        with pytest.raises(GraphInputError):
            parse_config_text("bogus=1")
        with pytest.raises(GraphInputError):
            parse_config_text("n0=abc")

    def test_digest_and_text(self):
        a = RecursionConfig()
        assert a.digest() == RecursionConfig().digest()
        assert a.digest() != a.with_(seed=1).digest()
        assert RecursionConfig(**parse_config_text(a.as_text())) == a
