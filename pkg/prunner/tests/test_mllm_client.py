#!/usr/bin/env python

# This work is licensed under the terms of the MIT license.
# For a copy, see <https://opensource.org/licenses/MIT>.

"""
Unit tests of the model client, its backends and the reply store
"""

import json
import os
import shutil
import tempfile
from unittest import TestCase

import httpx

from prunner.autoagents.mllm_client import (MAX_IMAGE_BYTES, Backend, ChatResponse, ClientConfig, EmptyCompletion,
                                            HttpError, ImageUnreadable, InvalidClientConfig, LiveBackend,
                                            RecordBackend, ReplayBackend, TransportError, build_messages,
                                            fingerprint, read_image)
from prunner.autoagents.prompt_builder import PromptBundle, Stage
from prunner.autoagents.replay_store import ReadOnlyStore, ReplayMiss, ReplayStore, StoreCorrupt, StoreNotFound

IMAGE = os.path.join(os.path.dirname(__file__), '..', 'data', 'scenes', 'images', 'scene-0001', '000.png')


def _completion(text):
    return {
        "id": "chatcmpl-test",
        "object": "chat.completion",
        "created": 0,
        "model": "gpt-4o",
        "choices": [{"index": 0, "finish_reason": "stop",
                     "message": {"role": "assistant", "content": text}}],
        "usage": {"prompt_tokens": 12, "completion_tokens": 5, "total_tokens": 17},
    }


class ScriptedBackend(Backend):

    """
    Backend answering from a fixed list of texts
    """

    def __init__(self, config, texts):
        super(ScriptedBackend, self).__init__(config)
        self.texts = list(texts)
        self.calls = 0

    def complete(self, bundle):
        self.calls += 1
        return ChatResponse(text=self.texts.pop(0))


class TestLiveBackend(TestCase):

    """
    Requests through an httpx mock transport
    """

    def setUp(self):
        self.config = ClientConfig(base_url="http://endpoint.test/v1", api_key="secret", max_retries=3)
        self.bundle = PromptBundle(system_text="system", user_text="user",
                                   images=((IMAGE, "image/png"),), stage=Stage.Reasoning)
        self.requests = []

    def _backend(self, handler):
        def record(request):
            self.requests.append(request)
            return handler(request)
        client = httpx.Client(transport=httpx.MockTransport(record))
        return LiveBackend(self.config, http_client=client, sleep=lambda seconds: None)

    def test_success(self):
        backend = self._backend(lambda request: httpx.Response(200, json=_completion("Speed: [1]")))
        response = backend.complete(self.bundle)
        self.assertEqual(response.text, "Speed: [1]")
        self.assertEqual((response.prompt_tokens, response.completion_tokens), (12, 5))
        self.assertEqual(backend.attempts, 1)

        body = json.loads(self.requests[0].content)
        self.assertEqual(body["model"], "gpt-4o")
        self.assertEqual(body["temperature"], 0.0)
        self.assertEqual(body["messages"][0], {"role": "system", "content": "system"})
        user = body["messages"][1]["content"]
        self.assertTrue(user[0]["image_url"]["url"].startswith("data:image/png;base64,"))
        self.assertEqual(user[-1], {"type": "text", "text": "user"})
        self.assertEqual(self.requests[0].headers["authorization"], "Bearer secret")

    def test_unauthorized_is_not_retried(self):
        backend = self._backend(lambda request: httpx.Response(401, json={"error": {"message": "bad key"}}))
        with self.assertRaises(HttpError) as context:
            backend.complete(self.bundle)
        self.assertEqual(context.exception.status, 401)
        self.assertEqual(backend.attempts, 1)

    def test_timeouts_exhaust_retries(self):
        def handler(request):
            raise httpx.ReadTimeout("timed out", request=request)
        backend = self._backend(handler)
        with self.assertRaises(TransportError):
            backend.complete(self.bundle)
        self.assertEqual(backend.attempts, self.config.max_retries + 1)

    def test_server_error_then_success(self):
        responses = [httpx.Response(500, json={"error": {"message": "busy"}}),
                     httpx.Response(429, json={"error": {"message": "slow down"}}),
                     httpx.Response(200, json=_completion("ok"))]
        backend = self._backend(lambda request: responses.pop(0))
        self.assertEqual(backend.complete(self.bundle).text, "ok")
        self.assertEqual(backend.attempts, 3)

    def test_empty_completion(self):
        backend = self._backend(lambda request: httpx.Response(200, json=_completion("")))
        with self.assertRaises(EmptyCompletion):
            backend.complete(self.bundle)


class TestClientHelpers(TestCase):

    """
    Configuration, images and fingerprints
    """

    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.image = os.path.join(self._tmp.name, 'frame.png')
        shutil.copyfile(IMAGE, self.image)

    def tearDown(self):
        self._tmp.cleanup()

    def _bundle(self, user_text="user"):
        return PromptBundle(system_text="system", user_text=user_text,
                            images=((self.image, "image/png"),), stage=Stage.Reasoning)

    def test_invalid_config(self):
        for values in ({"timeout": 0}, {"max_retries": -1}, {"temperature": 3.0}, {"max_tokens": 0}):
            with self.assertRaises(InvalidClientConfig):
                ClientConfig(**values)

    def test_repr_hides_key(self):
        self.assertNotIn("secret", repr(ClientConfig(api_key="secret")))

    def test_fingerprint(self):
        key = fingerprint(self._bundle(), "gpt-4o", 0.0)
        self.assertEqual(key, fingerprint(self._bundle(), "gpt-4o", 0.0))
        self.assertEqual(len(key), 64)
        self.assertNotEqual(key, fingerprint(self._bundle("other"), "gpt-4o", 0.0))
        self.assertNotEqual(key, fingerprint(self._bundle(), "gpt-4o-mini", 0.0))
        self.assertNotEqual(key, fingerprint(self._bundle(), "gpt-4o", 0.5))

        with open(self.image, 'r+b') as fd:
            data = bytearray(fd.read())
            data[-13] ^= 0x01
            fd.seek(0)
            fd.write(data)
        self.assertNotEqual(key, fingerprint(self._bundle(), "gpt-4o", 0.0))

    def test_messages_order(self):
        messages = build_messages(self._bundle())
        self.assertEqual([message["role"] for message in messages], ["system", "user"])
        self.assertEqual(messages[1]["content"][0]["type"], "image_url")

    def test_unreadable_images(self):
        with self.assertRaises(ImageUnreadable):
            read_image(os.path.join(self._tmp.name, 'absent.png'))
        large = os.path.join(self._tmp.name, 'large.png')
        with open(large, 'wb') as fd:
            fd.truncate(MAX_IMAGE_BYTES + 1)
        with self.assertRaises(ImageUnreadable):
            read_image(large)


class TestRecordReplay(TestCase):

    """
    Recording replies and answering from them
    """

    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.store_path = os.path.join(self._tmp.name, 'store', 'replies.jsonl')
        self.image = os.path.join(self._tmp.name, 'frame.png')
        shutil.copyfile(IMAGE, self.image)
        self.config = ClientConfig()
        self.bundle = PromptBundle(system_text="system", user_text="user",
                                   images=((self.image, "image/png"),), stage=Stage.Reasoning)

    def tearDown(self):
        self._tmp.cleanup()

    def test_record_then_replay(self):
        inner = ScriptedBackend(self.config, ["first reply", "first reply"])
        recorder = RecordBackend(self.config, inner, ReplayStore(self.store_path, record=True))
        self.assertEqual(recorder.complete(self.bundle).text, "first reply")
        self.assertEqual(recorder.complete(self.bundle).text, "first reply")

        with open(self.store_path, 'r', encoding='utf-8') as fd:
            self.assertEqual(len(fd.readlines()), 1)

        replay = ReplayBackend(self.config, ReplayStore(self.store_path))
        self.assertEqual(replay.complete(self.bundle).text, "first reply")
        self.assertEqual(inner.calls, 2)

    def test_changed_pixel_misses(self):
        inner = ScriptedBackend(self.config, ["reply"])
        RecordBackend(self.config, inner, ReplayStore(self.store_path, record=True)).complete(self.bundle)

        with open(self.image, 'r+b') as fd:
            data = bytearray(fd.read())
            data[-13] ^= 0x01
            fd.seek(0)
            fd.write(data)
        with self.assertRaises(ReplayMiss):
            ReplayBackend(self.config, ReplayStore(self.store_path)).complete(self.bundle)

    def test_store_errors(self):
        with self.assertRaises(StoreNotFound):
            ReplayStore(self.store_path)
        store = ReplayStore(self.store_path, record=True)
        store.put("a" * 64, "text")
        with self.assertRaises(ReadOnlyStore):
            ReplayStore(self.store_path).put("b" * 64, "text")

        with open(self.store_path, 'a', encoding='utf-8') as fd:
            fd.write('{"key": "c", "text": 3}\n')
        with self.assertRaises(StoreCorrupt) as context:
            ReplayStore(self.store_path)
        self.assertEqual(context.exception.line, 2)

    def test_store_keys(self):
        store = ReplayStore(self.store_path, record=True)
        store.put("b", "two")
        store.put("a", "one")
        reopened = ReplayStore(self.store_path)
        self.assertEqual(reopened.keys(), ["a", "b"])
        self.assertIn("a", reopened)
        self.assertEqual(len(reopened), 2)
        self.assertEqual(reopened.get("b"), "two")
