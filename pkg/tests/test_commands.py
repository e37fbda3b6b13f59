"""Command parsing, error detection, solution matching, completions."""

from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from rangetriage import commands as cp
from rangetriage.commands import SolutionSpec, TaskCompletion


class TestParseCommand:
    def test_tool_options_arguments(self):
        (seg,) = cp.parse_command("nmap -sV -p 80 10.1.26.9").segments
        assert seg.tool == "nmap"
        assert seg.options == ["-sV", "-p"]
        assert seg.arguments == ["80", "10.1.26.9"]

    def test_pipe_splits_segments(self):
        parsed = cp.parse_command("cat f.txt | grep -i flag")
        assert [s.tool for s in parsed.segments] == ["cat", "grep"]
        assert parsed.segments[1].options == ["-i"]

    def test_all_separators(self):
        parsed = cp.parse_command("a; b && c || d | e")
        assert [s.tool for s in parsed.segments] == list("abcde")

    def test_quoted_pipe_stays_in_token(self):
        parsed = cp.parse_command("echo 'a | b'")
        (seg,) = parsed.segments
        assert seg.arguments == ["a | b"]

    def test_double_quotes(self):
        (seg,) = cp.parse_command('grep "two words" f').segments
        assert seg.arguments == ["two words", "f"]

    def test_unterminated_quote_best_effort(self):
        parsed = cp.parse_command("echo 'oops")
        assert parsed.quote_warning
        assert parsed.segments[0].arguments == ["oops"]

    def test_no_warning_when_quotes_balanced(self):
        assert not cp.parse_command("echo ok").quote_warning

    def test_env_assignment_is_argument(self):
        (seg,) = cp.parse_command("FOO=1 ./run.sh > out.txt").segments
        assert seg.tool == "FOO=1"
        assert "./run.sh" in seg.arguments
        assert ">" in seg.arguments

    def test_single_ampersand_not_separator(self):
        (seg,) = cp.parse_command("sleep 10 &").segments
        assert seg.tool == "sleep"
        assert seg.arguments == ["10", "&"]

    def test_empty_text_rejected(self):
        with pytest.raises(ValueError):
            cp.parse_command("   ")

    def test_adjacent_quotes_concatenate(self):
        (seg,) = cp.parse_command("echo ab'c d'e").segments
        assert seg.arguments == ["abc de"]

    def test_dash_token_is_option(self):
        (seg,) = cp.parse_command("ls -la --color=auto /tmp").segments
        assert seg.options == ["-la", "--color=auto"]
        assert seg.arguments == ["/tmp"]

    def test_segments_nonempty_invariant(self):
        parsed = cp.parse_command("ls | | pwd")
        assert all(s.tool for s in parsed.segments)
        assert len(parsed.segments) == 2


SAFE_TOKEN = st.text(
    alphabet=st.characters(blacklist_categories=("Cs",), blacklist_characters="\x00"),
    min_size=1,
    max_size=8,
)


class TestRenderFixedPoint:
    @given(st.lists(st.lists(SAFE_TOKEN, min_size=1, max_size=4), min_size=1, max_size=3))
    def test_parse_render_fixed_point(self, token_segments):
        text = " | ".join(
            " ".join(cp.quote_token(t) for t in tokens) for tokens in token_segments
        )
        first = cp.parse_command(text)
        second = cp.parse_command(cp.render_command(first))
        assert [s.tokens for s in second.segments] == [s.tokens for s in first.segments]
        assert cp.render_command(second) == cp.render_command(first)

    def test_spec_tokens_survive(self):
        parsed = cp.parse_command("grep -r 'a | b' /etc")
        again = cp.parse_command(cp.render_command(parsed))
        assert again.segments == parsed.segments


class TestDetectError:
    @pytest.mark.parametrize(
        "output",
        [
            "bash: foo: command not found",
            "cat: /x: No such file or directory",
            "open(): PERMISSION DENIED",
            "sh: syntax error near unexpected token",
            "sudo: Operation not permitted",
        ],
    )
    def test_default_patterns(self, output):
        assert cp.detect_error(output)

    def test_clean_output(self):
        assert not cp.detect_error("PORT STATE SERVICE")

    def test_custom_patterns_override(self):
        assert cp.detect_error("Zugriff verweigert", patterns=["zugriff verweigert"])
        assert not cp.detect_error("command not found", patterns=["zugriff"])

    def test_empty_output(self):
        assert not cp.detect_error("")


class TestMatchSolution:
    def spec(self, **over):
        base = dict(
            task_id="t1",
            tool="nmap",
            required_options=("-sV",),
            required_arguments=("10.1.26.9",),
        )
        base.update(over)
        return SolutionSpec(**base)

    def test_subset_allows_extras(self):
        parsed = cp.parse_command("nmap -sV -p- 10.1.26.9 -oN scan.txt")
        assert cp.match_solution(parsed, self.spec())

    def test_subset_missing_option(self):
        parsed = cp.parse_command("nmap 10.1.26.9")
        assert not cp.match_solution(parsed, self.spec())

    def test_wrong_tool(self):
        parsed = cp.parse_command("masscan -sV 10.1.26.9")
        assert not cp.match_solution(parsed, self.spec())

    def test_any_segment_counts(self):
        parsed = cp.parse_command("cat targets | nmap -sV 10.1.26.9")
        assert cp.match_solution(parsed, self.spec())

    def test_exact_mode_rejects_extras(self):
        spec = self.spec(match_mode="exact")
        assert cp.match_solution(cp.parse_command("nmap -sV 10.1.26.9"), spec)
        assert not cp.match_solution(cp.parse_command("nmap -sV -p- 10.1.26.9"), spec)
        assert not cp.match_solution(cp.parse_command("nmap -sV 10.1.26.9 extra"), spec)

    def test_regex_argument_pattern(self):
        spec = self.spec(required_arguments=("re:10\\.1\\.26\\.\\d+",))
        assert cp.match_solution(cp.parse_command("nmap -sV 10.1.26.200"), spec)
        assert not cp.match_solution(cp.parse_command("nmap -sV 10.2.0.1"), spec)

    @given(st.lists(SAFE_TOKEN, min_size=0, max_size=4))
    def test_subset_monotone_under_extra_tokens(self, extras):
        base = "nmap -sV 10.1.26.9"
        spec = self.spec()
        assert cp.match_solution(cp.parse_command(base), spec)
        extended = " ".join([base, *(cp.quote_token(t) for t in extras)])
        assert cp.match_solution(cp.parse_command(extended), spec)


class TestDetectTaskCompletions:
    def test_fixture_completions(self, edurange_session, edurange_meta):
        completions = cp.detect_task_completions(
            edurange_session, edurange_meta.solutions
        )
        assert [(c.task_id, c.entry_index) for c in completions] == [
            ("t1", 2),
            ("t2", 6),
        ]
        stamps = [c.timestamp for c in completions]
        assert stamps == sorted(stamps)

    def test_error_output_excluded(self, edurange_session, edurange_meta):
        completions = cp.detect_task_completions(
            edurange_session, edurange_meta.solutions
        )
        t2 = next(c for c in completions if c.task_id == "t2")
        # entry 5 matches the spec but its output is an error; entry 6 wins
        assert t2.entry_index == 6

    def test_at_most_one_per_task(self, edurange_session, edurange_meta):
        completions = cp.detect_task_completions(
            edurange_session, edurange_meta.solutions
        )
        tasks = [c.task_id for c in completions]
        assert len(tasks) == len(set(tasks))

    def test_cross_task_matching(self, edurange_meta):
        # solution for t1 typed while the log labels the entry t2
        from rangetriage.ingest import EDURANGE, SessionRecord, StreamEntry

        entry = StreamEntry("e1", "c1", "t2", 1000, "grep secret /home", "ok")
        session = SessionRecord(
            EDURANGE, "e1", "scan-basics", 2, [entry], [], 1000, 1000, ["t2"]
        )
        completions = cp.detect_task_completions(session, edurange_meta.solutions)
        assert [c.task_id for c in completions] == ["t1"]

    def test_no_solutions_no_completions(self, edurange_session):
        assert cp.detect_task_completions(edurange_session, {}) == []


class TestSolutionSpecLoading:
    def test_single_and_list_forms(self):
        specs = cp.load_solution_specs(
            {
                "t1": {"tool": "grep", "required_arguments": ["x"]},
                "t2": [
                    {"tool": "cat", "required_arguments": ["/etc/shadow"]},
                    {"tool": "sudo", "match_mode": "exact"},
                ],
            }
        )
        assert len(specs["t1"]) == 1
        assert len(specs["t2"]) == 2
        assert specs["t2"][1].match_mode == "exact"

    def test_bad_mode_rejected(self):
        with pytest.raises(ValueError):
            SolutionSpec(task_id="t", tool="x", match_mode="fuzzy")

    def test_missing_tool_rejected(self):
        with pytest.raises(ValueError):
            cp.load_solution_specs({"t1": {"required_arguments": ["x"]}})
