"""Text-level speech I/O: injected utterances in, a transcript out.

Real speech engines are out of scope; the topic/service boundary is kept so
behaviors cannot tell the difference. The dialogue node answers prompts from
a small config-text database.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field

from .core import Core, HandlerFailed, Scheduler
from .nodes import SRV_TEMP, SRV_TTS, TOPIC_SPEECH, round_half_up

log = logging.getLogger(__name__)

TEMP_PLACEHOLDER = "{temp_f}"
TEMP_FAULT_REPLY = "I cannot read the temperature"

DEFAULT_DIALOGUES = """\
# prompt => response
what is your name => My name is H B S 2
what is your favorite color => My favorite color is blue. My vest is blue.
what is the temperature => The temperature is {temp_f} degrees
"""

_PUNCT = re.compile(r"[^\w\s]", re.UNICODE)
_SPACES = re.compile(r"\s+")


class DialogueParseError(Exception):
    def __init__(self, line_no: int, msg: str) -> None:
        super().__init__(f"line {line_no}: {msg}")
        self.line_no = line_no


def normalize(text: str) -> str:
    """Lowercase, strip punctuation, collapse whitespace. Idempotent."""
    text = _PUNCT.sub("", text.lower())
    return _SPACES.sub(" ", text).strip()


class DialogueDb:
    """Exact-match prompt -> response templates, keyed on normalized text."""

    def __init__(self) -> None:
        self.entries: dict[str, str] = {}

    def lookup(self, prompt: str) -> str | None:
        return self.entries.get(normalize(prompt))


def load_dialogue(config_text: str) -> DialogueDb:
    """Parse `prompt => response` lines; later duplicates override earlier."""
    db = DialogueDb()
    for line_no, raw in enumerate(config_text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=>" not in line:
            raise DialogueParseError(line_no, "expected 'prompt => response'")
        prompt, response = line.split("=>", 1)
        key = normalize(prompt)
        if not key:
            raise DialogueParseError(line_no, "empty prompt")
        db.entries[key] = response.strip()
    return db


@dataclass
class TranscriptEntry:
    t: float
    speaker: str
    text: str


@dataclass
class Transcript:
    entries: list[TranscriptEntry] = field(default_factory=list)

    def texts(self) -> list[str]:
        return [e.text for e in self.entries]

    def to_json(self) -> str:
        rows = [{"t": e.t, "text": e.text} for e in self.entries]
        return json.dumps(rows, indent=2) + "\n"


class TtsService:
    """Speaker stand-in: every request becomes a transcript entry."""

    def __init__(self, core: Core, sched: Scheduler, transcript: Transcript) -> None:
        self.sched = sched
        self.transcript = transcript
        core.register_service(SRV_TTS, self.handle)

    def handle(self, request) -> dict:
        text = request["text"] if isinstance(request, dict) else str(request)
        if text == "":
            log.warning("tts: empty utterance")
        self.transcript.entries.append(TranscriptEntry(self.sched.now, "robot", text))
        return {"spoken": text}


class SpeechInjector:
    """Publishes recognized text on the speech topic (STT stand-in)."""

    def __init__(self, core: Core) -> None:
        self.pub = core.advertise("speech_injector", TOPIC_SPEECH, 10)

    def inject(self, text: str) -> int:
        if not text:
            raise ValueError("speech text must be non-empty")
        return self.pub.publish(text)


class SpeechToSpeechNode:
    """Answers prompts found in the dialogue database via the TTS service."""

    def __init__(self, core: Core, db: DialogueDb, queue_size: int = 1) -> None:
        self.core = core
        self.db = db
        self.sub = core.subscribe("speech_to_speech", TOPIC_SPEECH, queue_size,
                                  self.on_msg)

    def on_msg(self, msg) -> None:
        response = self.db.lookup(str(msg.payload))
        if response is None:
            return  # unknown prompt: stay silent
        if TEMP_PLACEHOLDER in response:
            try:
                fahrenheit = self.core.call_service(SRV_TEMP, {})
                degrees = int(round_half_up(fahrenheit))
                response = response.replace(TEMP_PLACEHOLDER, str(degrees))
            except HandlerFailed:
                response = TEMP_FAULT_REPLY
        self.core.call_service(SRV_TTS, {"text": response})
