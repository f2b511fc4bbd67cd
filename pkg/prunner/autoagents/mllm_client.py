#!/usr/bin/env python

# This work is licensed under the terms of the MIT license.
# For a copy, see <https://opensource.org/licenses/MIT>.

"""
Client of OpenAI-compatible vision chat endpoints.

Three backends share one interface:
- LiveBackend sends the request, retrying transport errors, 429 and 5xx
- RecordBackend forwards to another backend and stores the reply
- ReplayBackend answers from a store without any network access
"""

import base64
import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass

import httpx
import openai
from openai import OpenAI
from tenacity import (RetryError, Retrying, before_sleep_log, retry_if_exception, stop_after_attempt,
                      wait_random_exponential)

from prunner.exceptions import DataError, UsageError

LOGGER = logging.getLogger(__name__)

MAX_IMAGE_BYTES = 20 * 1024 * 1024
MAX_BACKOFF = 60.0
DEFAULT_BASE_URL = "https://api.openai.com/v1"


class InvalidClientConfig(UsageError):

    """
    Raised when the client settings are out of range
    """


class TransportError(DataError):

    """
    Raised when a request still fails after all retries
    """

    def __init__(self, cause):
        super(TransportError, self).__init__("Request failed after retries: {}".format(cause))
        self.cause = cause


class HttpError(DataError):

    """
    Raised on a non-retryable HTTP status
    """

    def __init__(self, status, body_snippet=""):
        super(HttpError, self).__init__("HTTP {}: {}".format(status, body_snippet))
        self.status = status
        self.body_snippet = body_snippet


class EmptyCompletion(DataError):

    """
    Raised when the endpoint answers without text
    """


class ImageUnreadable(DataError):

    """
    Raised when an attached image cannot be read or exceeds MAX_IMAGE_BYTES
    """

    def __init__(self, path, reason=""):
        super(ImageUnreadable, self).__init__("Cannot attach image {}: {}".format(path, reason))
        self.path = path


@dataclass(frozen=True)
class ClientConfig(object):

    """
    Endpoint and decoding settings
    """

    base_url: str = DEFAULT_BASE_URL
    model: str = "gpt-4o"
    api_key: str = ""
    temperature: float = 0.0
    max_tokens: int = 1024
    timeout: float = 120.0
    max_retries: int = 3

    def __post_init__(self):
        if not self.timeout > 0:
            raise InvalidClientConfig("timeout must be positive, got {}".format(self.timeout))
        if self.max_retries < 0:
            raise InvalidClientConfig("max_retries must not be negative, got {}".format(self.max_retries))
        if not 0.0 <= self.temperature <= 2.0:
            raise InvalidClientConfig("temperature must be in [0, 2], got {}".format(self.temperature))
        if self.max_tokens < 1:
            raise InvalidClientConfig("max_tokens must be positive, got {}".format(self.max_tokens))

    def __repr__(self):
        return "ClientConfig(base_url={!r}, model={!r}, temperature={}, max_tokens={}, timeout={}, " \
               "max_retries={})".format(self.base_url, self.model, self.temperature, self.max_tokens,
                                        self.timeout, self.max_retries)

    @classmethod
    def from_args(cls, args):
        """
        Builds the configuration from parsed arguments, OPENEMMA_* environment variables filling the gaps
        """
        return cls(base_url=args.base_url or os.getenv('OPENEMMA_BASE_URL', DEFAULT_BASE_URL),
                   model=args.model,
                   api_key=args.api_key or os.getenv('OPENEMMA_API_KEY', ''),
                   temperature=args.temperature,
                   max_tokens=args.max_tokens,
                   timeout=args.timeout,
                   max_retries=args.max_retries)


@dataclass(frozen=True)
class ChatResponse(object):

    """
    Reply of one request
    """

    text: str
    prompt_tokens: int = 0
    completion_tokens: int = 0
    latency_ms: float = 0.0


def read_image(path):
    """
    Bytes of an attached image
    """
    try:
        if os.path.getsize(path) > MAX_IMAGE_BYTES:
            raise ImageUnreadable(path, "larger than {} bytes".format(MAX_IMAGE_BYTES))
        with open(path, 'rb') as fd:
            return fd.read()
    except OSError as e:
        raise ImageUnreadable(path, e.strerror or str(e))


def fingerprint(bundle, model, temperature):
    """
    SHA-256 over the model, the temperature, the texts and the content hash of every image, in order
    """
    document = {
        "model": model,
        "temperature": float(temperature),
        "texts": [bundle.system_text, bundle.user_text],
        "images": [hashlib.sha256(read_image(path)).hexdigest() for path, _ in bundle.images],
    }
    canonical = json.dumps(document, sort_keys=True, separators=(',', ':'), ensure_ascii=False)
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


def build_messages(bundle):
    """
    Chat messages of a bundle: the system text, then the images (oldest first) and the user text
    """
    content = []
    for path, mime in bundle.images:
        encoded = base64.b64encode(read_image(path)).decode('ascii')
        content.append({"type": "image_url", "image_url": {"url": "data:{};base64,{}".format(mime, encoded)}})
    content.append({"type": "text", "text": bundle.user_text})

    messages = []
    if bundle.system_text:
        messages.append({"role": "system", "content": bundle.system_text})
    messages.append({"role": "user", "content": content})
    return messages


def _is_retryable(error):
    if isinstance(error, (openai.APIConnectionError, openai.RateLimitError)):
        return True
    return isinstance(error, openai.APIStatusError) and error.status_code >= 500


class Backend(object):

    """
    Base class of the backends
    """

    def __init__(self, config):
        self.config = config

    def complete(self, bundle):
        """
        Returns the ChatResponse of a PromptBundle
        """
        raise NotImplementedError("This function must be re-implemented by the backends")

    def close(self):
        """
        Releases the backend resources
        """


class LiveBackend(Backend):

    """
    Sends requests to the endpoint of the configuration.
    http_client and sleep can be replaced, e.g. by a client on an httpx.MockTransport.
    """

    def __init__(self, config, http_client=None, sleep=time.sleep):
        super(LiveBackend, self).__init__(config)
        if http_client is None:
            http_client = httpx.Client(timeout=config.timeout,
                                       limits=httpx.Limits(max_connections=16, max_keepalive_connections=16))
        self._http_client = http_client
        self._client = OpenAI(base_url=config.base_url,
                              api_key=config.api_key or "EMPTY",
                              timeout=config.timeout,
                              max_retries=0,
                              http_client=http_client)
        self._sleep = sleep
        self._lock = threading.Lock()
        self.attempts = 0

    def _send(self, messages):
        with self._lock:
            self.attempts += 1
        return self._client.chat.completions.create(model=self.config.model,
                                                    messages=messages,
                                                    temperature=self.config.temperature,
                                                    max_tokens=self.config.max_tokens)

    def complete(self, bundle):
        messages = build_messages(bundle)
        retrying = Retrying(stop=stop_after_attempt(self.config.max_retries + 1),
                            wait=wait_random_exponential(multiplier=1, max=MAX_BACKOFF),
                            retry=retry_if_exception(_is_retryable),
                            before_sleep=before_sleep_log(LOGGER, logging.WARNING),
                            sleep=self._sleep)

        start = time.monotonic()
        try:
            completion = retrying(self._send, messages)
        except RetryError as e:
            raise TransportError(e.last_attempt.exception())
        except openai.APIStatusError as e:
            raise HttpError(e.status_code, (e.response.text or "")[:200])
        latency_ms = (time.monotonic() - start) * 1000.0

        if not completion.choices or not completion.choices[0].message.content:
            raise EmptyCompletion("Model {} returned no text".format(self.config.model))
        usage = completion.usage
        return ChatResponse(text=completion.choices[0].message.content,
                            prompt_tokens=usage.prompt_tokens if usage else 0,
                            completion_tokens=usage.completion_tokens if usage else 0,
                            latency_ms=latency_ms)

    def close(self):
        self._http_client.close()


class RecordBackend(Backend):

    """
    Forwards to another backend and stores every reply under the request fingerprint
    """

    def __init__(self, config, inner, store):
        super(RecordBackend, self).__init__(config)
        self._inner = inner
        self._store = store

    def complete(self, bundle):
        key = fingerprint(bundle, self.config.model, self.config.temperature)
        response = self._inner.complete(bundle)
        self._store.put(key, response.text)
        return response

    def close(self):
        self._inner.close()


class ReplayBackend(Backend):

    """
    Answers from a reply store
    """

    def __init__(self, config, store):
        super(ReplayBackend, self).__init__(config)
        self._store = store

    def complete(self, bundle):
        key = fingerprint(bundle, self.config.model, self.config.temperature)
        text = self._store.get(key)
        if not text:
            raise EmptyCompletion("Stored reply {} is empty".format(key))
        return ChatResponse(text=text)


def complete(bundle, config, backend=None):
    """
    Sends one bundle, through a new LiveBackend unless a backend is given
    """
    if backend is not None:
        return backend.complete(bundle)
    live = LiveBackend(config)
    try:
        return live.complete(bundle)
    finally:
        live.close()
