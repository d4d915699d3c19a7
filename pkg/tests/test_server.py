"""Tests for the MCP tool surface."""

import json

import pytest

from assortment_visibility.config import Config
from assortment_visibility.instgen import example_instance, gen_random
from assortment_visibility.server import TOOLS, create_server, dispatch


def payload(instance):
    return json.loads(instance.model_dump_json(by_alias=True))


@pytest.fixture
def config():
    return Config.model_validate({"ptas": {"epsilon": 0.75, "reps": 2, "seed": 3}})


class TestServer:
    """Test server construction."""

    def test_create_server(self, config):
        """Test the server is created with its name."""
        server = create_server(config)

        assert server.name == "assortment-visibility"

    def test_tool_schemas(self):
        """Test every tool input model produces a JSON schema."""
        for model, description in TOOLS.values():
            schema = model.model_json_schema()
            assert schema["type"] == "object"
            assert description


class TestDispatch:
    """Test tool calls."""

    async def test_solve_apv(self, config):
        """Test the two-product example through the tool."""
        result = await dispatch(
            "solve_apv", {"instance": payload(example_instance(100.0, 4))}, config
        )
        document = json.loads(result[0].text)

        assert document["objective"] == pytest.approx(4 / 102)
        assert document["feasible"] is True

    async def test_solve_apv_lp(self, config):
        """Test the LP method reports its bound."""
        instance = gen_random(3, 2, seed=2)
        arguments = {"instance": payload(instance), "method": "lp"}
        result = await dispatch("solve_apv", arguments, config)
        document = json.loads(result[0].text)

        assert document["method"] == "lp"
        assert document["lp_value"] == pytest.approx(document["objective"], abs=1e-6)

    async def test_solve_apvc(self, config, capped_pair):
        """Test the scheme uses the configured seed and the requested reps."""
        result = await dispatch(
            "solve_apvc", {"instance": payload(capped_pair), "reps": 1}, config
        )
        document = json.loads(result[0].text)

        assert document["objective"] == pytest.approx(7 / 6)
        assert document["seed"] == 3
        assert document["reps"] == 1

    async def test_solve_apvc_oracle(self, config, capped_pair):
        """Test the exhaustive path."""
        result = await dispatch(
            "solve_apvc", {"instance": payload(capped_pair), "oracle": True}, config
        )

        assert json.loads(result[0].text)["method"] == "oracle"

    async def test_fee_report(self, config):
        """Test the ratio is reported."""
        result = await dispatch(
            "fee_report", {"instance": payload(example_instance(100.0, 10))}, config
        )
        document = json.loads(result[0].text)

        assert document["price_of_visibility"] == pytest.approx(51.0, abs=1e-9)

    async def test_generate_instance(self, config):
        """Test generated instances match the generator."""
        result = await dispatch(
            "generate_instance", {"kind": "random", "n": 4, "T": 3, "seed": 6}, config
        )

        assert json.loads(result[0].text) == payload(gen_random(4, 3, seed=6))

    async def test_generate_instance_default_seed(self, config, monkeypatch):
        """Test the generator seed falls back to ASSORT_SEED, then the config."""
        arguments = {"kind": "random", "n": 3, "T": 2}

        from_config = await dispatch("generate_instance", arguments, config)
        monkeypatch.setenv("ASSORT_SEED", "8")
        from_env = await dispatch("generate_instance", arguments, config)

        assert json.loads(from_config[0].text) == payload(gen_random(3, 2, seed=3))
        assert json.loads(from_env[0].text) == payload(gen_random(3, 2, seed=8))

    async def test_verify_instance(self, config):
        """Test verification of a small instance."""
        result = await dispatch(
            "verify_instance", {"instance": payload(gen_random(3, 2, seed=1))}, config
        )

        assert json.loads(result[0].text)["passed"] is True

    async def test_unknown_tool(self, config):
        """Test unknown tool names."""
        result = await dispatch("nope", {}, config)

        assert result[0].text == "Unknown tool: nope"

    async def test_solver_error(self, config):
        """Test solver errors become error text."""
        instance = example_instance(100.0, 2)
        result = await dispatch(
            "fee_report", {"instance": payload(instance), "what_if": 1}, config
        )

        assert result[0].text.startswith("Error:")
        assert "already has visibility" in result[0].text

    async def test_invalid_arguments(self, config):
        """Test invalid arguments become error text."""
        result = await dispatch("solve_apvc", {"instance": {"prices": []}}, config)

        assert result[0].text.startswith("Error:")

    async def test_uncapped_instance(self, config):
        """Test the scheme rejects an instance without a cap."""
        result = await dispatch(
            "solve_apvc", {"instance": payload(example_instance(3.0, 2))}, config
        )

        assert "cardinality cap" in result[0].text
