"""Chat-completion client for the language-model frontend.

The client speaks the common chat-completions shape: POST to the configured
endpoint with ``{model, messages, temperature}`` and read
``choices[0].message.content``.  Temperature is pinned to 0 and transient
failures are retried exactly once.
"""
from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Protocol, Sequence

import httpx

from .errors import AuthFailure, ConfigError, ProviderFailure, Timeout, TransportFailure
from .plan import Plan, parse_plan
from .prompt import build_llm_prompt
from .registry import ReferenceVocab

__all__ = [
    "LlmConfig",
    "LlmClient",
    "HttpLlmClient",
    "CannedLlmClient",
    "LlmNormalizationProvider",
    "plan_with_llm",
]

_RETRY_DELAY_SECONDS = 0.2


@dataclass(frozen=True)
class LlmConfig:
    endpoint: str
    model: str
    api_key: str | None = None
    timeout: float = 30.0

    @classmethod
    def from_env(cls, env: Mapping[str, str] | None = None) -> "LlmConfig":
        if env is None:
            env = os.environ
        endpoint = env.get("LLM_ENDPOINT")
        model = env.get("LLM_MODEL")
        if not endpoint or not model:
            raise ConfigError("LLM frontend requires LLM_ENDPOINT and LLM_MODEL")
        return cls(endpoint=endpoint, model=model, api_key=env.get("LLM_API_KEY"))


class LlmClient(Protocol):
    def complete(self, prompt: str) -> str:
        """Return the raw completion text for ``prompt``."""
        ...


class HttpLlmClient:
    """Deterministic chat-completion client (temperature 0, one retry)."""

    def __init__(self, config: LlmConfig):
        self._config = config

    def complete(self, prompt: str) -> str:
        payload = {
            "model": self._config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": 0,
        }
        headers = {}
        if self._config.api_key:
            headers["Authorization"] = f"Bearer {self._config.api_key}"

        last_error: Exception | None = None
        for attempt in range(2):
            try:
                response = httpx.post(
                    self._config.endpoint,
                    json=payload,
                    headers=headers,
                    timeout=self._config.timeout,
                )
            except httpx.TimeoutException as exc:
                last_error = Timeout(f"LLM request timed out after {self._config.timeout}s")
                last_error.__cause__ = exc
            except httpx.TransportError as exc:
                last_error = TransportFailure(f"LLM endpoint unreachable: {exc}")
                last_error.__cause__ = exc
            else:
                if response.status_code in (401, 403):
                    raise AuthFailure(f"LLM endpoint rejected credentials ({response.status_code})")
                if response.status_code >= 500:
                    last_error = TransportFailure(f"LLM endpoint returned {response.status_code}")
                elif response.status_code != 200:
                    raise TransportFailure(f"LLM endpoint returned {response.status_code}")
                else:
                    return _extract_content(response)
            if attempt == 0:
                time.sleep(_RETRY_DELAY_SECONDS)
        assert last_error is not None
        raise last_error


def _extract_content(response: httpx.Response) -> str:
    try:
        body = response.json()
        content = body["choices"][0]["message"]["content"]
    except (json.JSONDecodeError, LookupError, TypeError) as exc:
        raise TransportFailure(f"malformed completion response: {exc}") from exc
    if not isinstance(content, str):
        raise TransportFailure("completion content is not a string")
    return content


class CannedLlmClient:
    """Replays responses from a JSONL fixture of ``{query, response}`` rows.

    The prompt embeds the user query exactly once, so replay matches the
    first fixture query appearing verbatim in the prompt.
    """

    def __init__(self, pairs: Sequence[tuple[str, str]]):
        self._pairs = list(pairs)

    @classmethod
    def from_file(cls, path: Path | str) -> "CannedLlmClient":
        pairs = []
        with open(path, encoding="utf-8") as handle:
            for line_no, line in enumerate(handle, start=1):
                line = line.strip()
                if not line:
                    continue
                row = json.loads(line)
                if not isinstance(row.get("query"), str) or not isinstance(row.get("response"), str):
                    raise ConfigError(f"{path}:{line_no}: fixture rows need string query and response")
                pairs.append((row["query"], row["response"]))
        return cls(pairs)

    def complete(self, prompt: str) -> str:
        for query, response in self._pairs:
            if query in prompt:
                return response
        raise KeyError("no canned response matches the prompt")


class LlmNormalizationProvider:
    """Term resolver backed by an :class:`LlmClient`.

    Issues a single-purpose instruction asking the model to pick one of the
    candidate tokens or answer ``none``; transport problems surface as
    :class:`ProviderFailure` so normalization can degrade gracefully.
    """

    def __init__(self, client: LlmClient):
        self._client = client

    def choose(self, term: str, candidates: Sequence[str]) -> str | None:
        prompt = (
            "Map the medical term to one of the allowed tokens, or answer exactly "
            f"'none' if no token fits.\nTerm: {term}\nAllowed tokens: {', '.join(candidates)}\n"
            "Answer with one token only."
        )
        try:
            reply = self._client.complete(prompt).strip().strip("'\"").lower()
        except Exception as exc:  # degrade on any client failure
            raise ProviderFailure(str(exc)) from exc
        if reply == "none":
            return None
        return reply


def plan_with_llm(query: str, vocab: ReferenceVocab, client: LlmClient) -> Plan:
    """Build the prompt, call the model, and parse the returned plan."""
    prompt = build_llm_prompt(query, vocab)
    raw = client.complete(prompt)
    return parse_plan(raw, query=query)
