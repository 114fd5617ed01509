import time

import numpy as np
import pytest

from wolfsearch.oracle import OracleEndpoint, OracleError, OracleProcess, format_floats

from conftest import oracle_command


def endpoint(name, *args, **kw):
    return OracleEndpoint(command=oracle_command(name, *args), **kw)


class TestEndpointValidation:
    def test_default_fields(self):
        ep = OracleEndpoint(command=("prog",))
        assert ep.verbs == frozenset({"GEN", "MATCH"})
        assert ep.timeout_ms == 10000
        assert ep.latent_dim is None and ep.embed_dim is None

    def test_empty_command(self):
        with pytest.raises(ValueError, match="must not be empty"):
            OracleEndpoint(command=()).validate()

    def test_unknown_verb(self):
        with pytest.raises(ValueError, match="unknown oracle verbs"):
            OracleEndpoint(command=("p",), verbs=frozenset({"EVAL"})).validate()

    def test_no_verbs(self):
        with pytest.raises(ValueError, match="at least one verb"):
            OracleEndpoint(command=("p",), verbs=frozenset()).validate()

    def test_bad_timeout(self):
        with pytest.raises(ValueError, match="timeout_ms"):
            OracleEndpoint(command=("p",), timeout_ms=0).validate()


def test_format_floats_round_trip():
    values = [0.1, -3.5, 1e-300, 2.0 / 3.0]
    text = format_floats(values)
    assert [float(tok) for tok in text.split(" ")] == values


class TestHappyPath:
    def test_gen_echo(self):
        with OracleProcess(endpoint("echo_oracle.py")) as proc:
            z = np.array([1.5, -2.25, 0.0])
            out = proc.gen(z)
            assert np.array_equal(out, z)

    def test_gen_many_requests_lockstep(self):
        with OracleProcess(endpoint("echo_oracle.py")) as proc:
            for i in range(20):
                z = np.array([float(i), float(-i)])
                assert np.array_equal(proc.gen(z), z)

    def test_match_score(self):
        with OracleProcess(endpoint("echo_oracle.py")) as proc:
            assert proc.match([1.0, 0.0], [0.0, 1.0]) == 0.0

    def test_cosine_oracle_value(self):
        with OracleProcess(endpoint("cosine_oracle.py")) as proc:
            got = proc.match([1.0, 0.0], [1.0, 1.0])
            assert got == pytest.approx(1.0 / np.sqrt(2.0), abs=1e-12)

    def test_close_idempotent(self):
        proc = OracleProcess(endpoint("echo_oracle.py"))
        proc.gen([1.0])
        proc.close()
        proc.close()


class TestVerbGating:
    def test_gen_not_declared(self):
        ep = endpoint("echo_oracle.py", verbs=frozenset({"MATCH"}))
        with OracleProcess(ep) as proc:
            with pytest.raises(ValueError, match="does not declare the GEN verb"):
                proc.gen([1.0])

    def test_match_not_declared(self):
        ep = endpoint("echo_oracle.py", verbs=frozenset({"GEN"}))
        with OracleProcess(ep) as proc:
            with pytest.raises(ValueError, match="does not declare the MATCH verb"):
                proc.match([1.0], [1.0])


class TestDimDeclarations:
    def test_latent_dim_enforced_before_wire(self):
        ep = endpoint("echo_oracle.py", latent_dim=3)
        with OracleProcess(ep) as proc:
            with pytest.raises(ValueError, match="latent has dim 2, endpoint declares 3"):
                proc.gen([1.0, 2.0])

    def test_embed_dim_enforced_on_vec(self):
        # echo returns dim 2, endpoint declares 5
        ep = endpoint("echo_oracle.py", embed_dim=5)
        with OracleProcess(ep) as proc:
            with pytest.raises(OracleError, match="VEC has dim 2, endpoint declares 5"):
                proc.gen([1.0, 2.0])

    def test_probe_template_dims_must_agree(self):
        with OracleProcess(endpoint("echo_oracle.py")) as proc:
            with pytest.raises(ValueError, match="probe dim 2 != template dim 3"):
                proc.match([1.0, 2.0], [1.0, 2.0, 3.0])


class TestMisbehavior:
    def test_err_response_surfaces_message(self):
        with OracleProcess(endpoint("misbehave_oracle.py", "err")) as proc:
            with pytest.raises(OracleError, match="oracle reported an error: bad dim"):
                proc.gen([1.0])

    def test_garbage_response(self):
        with OracleProcess(endpoint("misbehave_oracle.py", "garbage")) as proc:
            with pytest.raises(OracleError, match="expected VEC response, got 'BANANA'"):
                proc.gen([1.0])

    def test_short_vec(self):
        with OracleProcess(endpoint("misbehave_oracle.py", "shortvec")) as proc:
            with pytest.raises(OracleError, match="VEC declares 5 values but carries 2"):
                proc.gen([1.0])

    def test_nan_score(self):
        with OracleProcess(endpoint("misbehave_oracle.py", "nanscore")) as proc:
            with pytest.raises(OracleError, match="non-finite score nan"):
                proc.match([1.0], [1.0])

    def test_timeout_is_bounded(self):
        ep = endpoint("misbehave_oracle.py", "silent", timeout_ms=300)
        start = time.perf_counter()
        with OracleProcess(ep) as proc:
            with pytest.raises(OracleError, match="timed out after 300 ms"):
                proc.gen([1.0])
        elapsed = time.perf_counter() - start
        assert elapsed < 5.0  # must kill the child, not wait out its sleep

    def test_early_exit_reports_death_and_stderr(self):
        with OracleProcess(endpoint("misbehave_oracle.py", "quit")) as proc:
            with pytest.raises(OracleError) as exc:
                proc.gen([1.0])
        msg = str(exc.value)
        assert "exited before replying" in msg
        # the child's last words ride along for diagnosis
        time.sleep(0)  # stderr pump is best effort; message may lag
        assert "giving up" in msg or exc.value.transcript

    def test_spawn_failure(self):
        ep = OracleEndpoint(command=("/no/such/binary-xyz",))
        proc = OracleProcess(ep)
        with pytest.raises(OracleError, match="could not start oracle"):
            proc.gen([1.0])

    def test_transcript_attached(self):
        with OracleProcess(endpoint("misbehave_oracle.py", "garbage")) as proc:
            with pytest.raises(OracleError) as exc:
                proc.gen([0.5])
        assert any(line.startswith(">> GEN 1") for line in exc.value.transcript)
        assert any(line.startswith("<< BANANA") for line in exc.value.transcript)
