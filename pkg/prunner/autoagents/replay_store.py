#!/usr/bin/env python

# This work is licensed under the terms of the MIT license.
# For a copy, see <https://opensource.org/licenses/MIT>.

"""
Content-addressed store of model replies.

A store is a JSONL file, one {"key": <request fingerprint>, "text": <reply>} per line.
Recording appends to it, replaying only reads it.
"""

import json
import logging
import os
import threading

from prunner.exceptions import DataError, UsageError

LOGGER = logging.getLogger(__name__)


class ReplayMiss(DataError):

    """
    Raised when a replayed request has no stored reply
    """

    def __init__(self, key):
        super(ReplayMiss, self).__init__("No stored reply for request {}".format(key))
        self.key = key


class StoreCorrupt(DataError):

    """
    Raised when a store line is not a {"key", "text"} JSON object
    """

    def __init__(self, path, line):
        super(StoreCorrupt, self).__init__("Reply store {} is corrupt at line {}".format(path, line))
        self.path = path
        self.line = line


class StoreNotFound(DataError):

    """
    Raised when a store to replay does not exist
    """


class ReadOnlyStore(UsageError):

    """
    Raised when recording into a store opened for replay
    """


class ReplayStore(object):

    """
    Replies indexed by request fingerprint.

    Lookups are lock free. Appends are serialized through one lock so the
    store can be shared by concurrent workers.
    """

    def __init__(self, path, record=False):
        self._path = path
        self._record = record
        self._lock = threading.Lock()
        self._entries = {}

        if os.path.exists(path):
            self._load()
        elif not record:
            raise StoreNotFound("Reply store {} does not exist".format(path))

    def _load(self):
        with open(self._path, 'r', encoding='utf-8') as fd:
            for number, line in enumerate(fd, 1):
                if not line.strip():
                    continue
                try:
                    entry = json.loads(line)
                except json.JSONDecodeError:
                    raise StoreCorrupt(self._path, number)
                if (not isinstance(entry, dict) or not isinstance(entry.get('key'), str)
                        or not isinstance(entry.get('text'), str)):
                    raise StoreCorrupt(self._path, number)
                self._entries[entry['key']] = entry['text']
        LOGGER.debug("Loaded %d replies from %s", len(self._entries), self._path)

    def __contains__(self, key):
        return key in self._entries

    def __len__(self):
        return len(self._entries)

    def keys(self):
        """
        Stored fingerprints, sorted
        """
        return sorted(self._entries)

    def get(self, key):
        """
        Stored reply of a fingerprint
        """
        try:
            return self._entries[key]
        except KeyError:
            raise ReplayMiss(key)

    def put(self, key, text):
        """
        Appends a reply to the store file
        """
        if not self._record:
            raise ReadOnlyStore("Reply store {} is opened for replay".format(self._path))
        with self._lock:
            if self._entries.get(key) == text:
                return
            directory = os.path.dirname(self._path)
            if directory:
                os.makedirs(directory, exist_ok=True)
            with open(self._path, 'a', encoding='utf-8') as fd:
                fd.write(json.dumps({"key": key, "text": text}, ensure_ascii=False) + "\n")
            self._entries[key] = text
