"""HTTP client for an external chat-completions tagging service."""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass
from importlib import resources
from typing import List, Optional

import httpx

from ..errors import ConfigError, TaggerUnavailable
from .vocabulary import Vocabulary

logger = logging.getLogger(__name__)

API_KEY_ENV = "BAMBOOKG_API_KEY"
PROMPT_VERSION = "v1"


def load_prompt(version: str = PROMPT_VERSION) -> str:
    path = resources.files(__package__).joinpath(f"assets/tagger_prompt_{version}.txt")
    return path.read_text("utf-8")


@dataclass(frozen=True)
class LlmTaggerEndpoint:
    base_url: str
    model_name: str
    timeout: float = 30.0
    api_key_env: str = API_KEY_ENV

    def __post_init__(self) -> None:
        if self.timeout <= 0:
            raise ConfigError("timeout must be positive")

    @property
    def api_key(self) -> Optional[str]:
        return os.environ.get(self.api_key_env)


class LlmTagger:
    """Tags text with one chat-completions request per call.

    The service is asked for a JSON array of strings. Anything else in
    the reply is a failure. Tags outside a supplied vocabulary are
    dropped here; the prompt alone is not trusted to restrict output.

    ``httpx.Client`` pools connections and is safe to share across
    threads, so one tagger may serve concurrent ingest workers.
    """

    def __init__(
        self,
        endpoint: LlmTaggerEndpoint,
        prompt: Optional[str] = None,
        client: Optional[httpx.Client] = None,
    ) -> None:
        self.endpoint = endpoint
        self.prompt = load_prompt() if prompt is None else prompt
        self._client = client or httpx.Client(timeout=endpoint.timeout)

    def close(self) -> None:
        self._client.close()

    def _request_body(self, text: str, max_tags: int) -> dict:
        return {
            "model": self.endpoint.model_name,
            "temperature": 0,
            "messages": [
                {"role": "system", "content": self.prompt.replace("{max_tags}", str(max_tags))},
                {"role": "user", "content": text},
            ],
        }

    def tag(self, text: str, max_tags: int, vocabulary: Optional[Vocabulary] = None) -> List[str]:
        url = self.endpoint.base_url.rstrip("/") + "/v1/chat/completions"
        headers = {"Content-Type": "application/json"}
        key = self.endpoint.api_key
        if key:
            headers["Authorization"] = f"Bearer {key}"
        try:
            resp = self._client.post(
                url,
                json=self._request_body(text, max_tags),
                headers=headers,
                timeout=self.endpoint.timeout,
            )
        except httpx.HTTPError as exc:
            raise TaggerUnavailable(f"request to {url} failed: {exc}") from exc
        if resp.status_code != 200:
            logger.error("tagger HTTP %s, body: %s", resp.status_code, resp.text)
            raise TaggerUnavailable(f"tagger returned HTTP {resp.status_code}")
        tags = parse_reply(resp.text)
        if vocabulary is not None:
            tags = [t for t in tags if t in vocabulary]
        return tags


def parse_reply(body: str) -> List[str]:
    """Extract the tag list from a chat-completions response body.

    Raises:
        TaggerUnavailable: on non-JSON bodies or any shape mismatch.
    """
    try:
        content = json.loads(body)["choices"][0]["message"]["content"]
        tags = json.loads(content)
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        logger.error("unparseable tagger reply: %s", body)
        raise TaggerUnavailable("tagger reply is not a JSON array of strings") from exc
    if not isinstance(tags, list) or not all(isinstance(t, str) for t in tags):
        logger.error("tagger reply has wrong shape: %s", body)
        raise TaggerUnavailable("tagger reply is not a JSON array of strings")
    return tags
