"""Generation harness: sweep prompt items x temperatures against a
chat-completions endpoint and persist every outcome as JSONL.

Requests deliberately carry ONLY model, messages, and temperature, so all
other sampling parameters stay at the provider's defaults. Runs are
resumable: (model, item, temperature) combinations that already have a
successful record are skipped on restart.
"""

from __future__ import annotations

import json
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import requests

from entrate.ingest import CorpusManifest, RecordParseError, scan_corpus

BUILTIN_ITEM_LISTS = ("countries", "capitals", "apples", "mammals", "animals",
                      "constants")


class AuthError(RuntimeError):
    pass


class PlaceholderError(ValueError):
    pass


@dataclass
class GenerationJob:
    endpoint: str                      # e.g. https://host/v1/chat/completions
    model: str
    prompt_template: str               # exactly one {item} placeholder
    items: list[str]
    temperatures: list[float]
    output_path: str
    api_key_env: str = "ENTRATE_API_KEY"
    max_retries: int = 5
    timeout: float = 120.0
    concurrency: int = 4
    backoff_base: float = 1.0
    backoff_factor: float = 2.0
    backoff_max: float = 60.0

    def validate(self) -> None:
        if self.prompt_template.count("{item}") != 1:
            raise PlaceholderError(
                "prompt template must contain exactly one {item} placeholder")
        if not self.temperatures:
            raise ValueError("temperatures must be non-empty")
        for t in self.temperatures:
            if not 0.0 <= t <= 2.0:
                raise ValueError(f"temperature {t} outside [0, 2]")


@dataclass
class GenerationRecord:
    model: str
    temperature: float
    item: str
    prompt: str
    text: str
    token_usage: dict | None = None
    timestamp: str = ""
    http_status: int | None = None
    attempts: int = 0
    error: str | None = None

    @property
    def ok(self) -> bool:
        return bool(self.text) and self.error is None

    def as_dict(self) -> dict:
        return {
            "model": self.model,
            "temperature": self.temperature,
            "item": self.item,
            "prompt": self.prompt,
            "text": self.text,
            "token_usage": self.token_usage,
            "timestamp": self.timestamp,
            "http_status": self.http_status,
            "attempts": self.attempts,
            "error": self.error,
        }


def load_items(source) -> list[str]:
    """Item list from a bundled name (see BUILTIN_ITEM_LISTS) or a file.

    One item per line; blank lines and '#' comments are skipped. The
    bundled lists are editable reconstructions with the documented sizes
    (201, 201, 251, 227, 139, 54), not a canonical enumeration.
    """
    if source in BUILTIN_ITEM_LISTS:
        text = (resources.files("entrate") / "data" / "items"
                / f"{source}.txt").read_text(encoding="utf-8")
    else:
        text = Path(source).read_text(encoding="utf-8")
    items = []
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            items.append(line)
    return items


def read_records(path) -> list[GenerationRecord]:
    records = []
    p = Path(path)
    if not p.exists():
        return records
    with open(p, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                d = json.loads(line)
            except json.JSONDecodeError as exc:
                raise RecordParseError(path, line_no, f"bad JSON: {exc}") from exc
            if "model" not in d or "item" not in d or "temperature" not in d:
                raise RecordParseError(path, line_no, "missing record keys")
            records.append(GenerationRecord(
                model=d["model"],
                temperature=d["temperature"],
                item=d["item"],
                prompt=d.get("prompt", ""),
                text=d.get("text", ""),
                token_usage=d.get("token_usage"),
                timestamp=d.get("timestamp", ""),
                http_status=d.get("http_status"),
                attempts=d.get("attempts", 0),
                error=d.get("error"),
            ))
    return records


class _Appender:
    """Serializes JSONL writes from worker threads."""

    def __init__(self, path):
        self._lock = threading.Lock()
        self._path = Path(path)
        self._path.parent.mkdir(parents=True, exist_ok=True)

    def append(self, record: GenerationRecord) -> None:
        line = json.dumps(record.as_dict(), ensure_ascii=False)
        with self._lock:
            with open(self._path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")


def _request_once(job: GenerationJob, api_key: str, prompt: str,
                  temperature: float):
    body = {
        "model": job.model,
        "messages": [{"role": "user", "content": prompt}],
        "temperature": temperature,
    }
    return requests.post(
        job.endpoint,
        json=body,
        headers={"Authorization": f"Bearer {api_key}"},
        timeout=job.timeout,
    )


def _generate_one(job: GenerationJob, api_key: str, item: str,
                  temperature: float, sleep=time.sleep) -> GenerationRecord:
    prompt = job.prompt_template.format(item=item)
    attempts = 0
    status = None
    error = None
    while attempts <= job.max_retries:
        attempts += 1
        try:
            resp = _request_once(job, api_key, prompt, temperature)
            status = resp.status_code
            if status == 200:
                payload = resp.json()
                text = payload["choices"][0]["message"]["content"] or ""
                usage = payload.get("usage")
                return GenerationRecord(
                    model=job.model, temperature=temperature, item=item,
                    prompt=prompt, text=text, token_usage=usage,
                    timestamp=_now(), http_status=status, attempts=attempts)
            error = f"HTTP {status}"
            if status not in (429,) and status < 500:
                break  # non-retryable client error
        except requests.RequestException as exc:
            error = f"request failed: {exc}"
        if attempts <= job.max_retries:
            delay = min(job.backoff_base * job.backoff_factor ** (attempts - 1),
                        job.backoff_max)
            sleep(delay)
    return GenerationRecord(
        model=job.model, temperature=temperature, item=item, prompt=prompt,
        text="", timestamp=_now(), http_status=status, attempts=attempts,
        error=error or "exhausted retries")


def _now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%S%z")


def run_job(job: GenerationJob, sleep=time.sleep) -> list[GenerationRecord]:
    """One request per (item x temperature); returns the new records.

    Every outcome (success or failure after retries) is appended to the
    job's JSONL output. Combinations with an existing successful record
    are skipped; earlier failures are retried.
    """
    job.validate()
    api_key = os.environ.get(job.api_key_env, "")
    if not api_key:
        raise AuthError(f"API key environment variable {job.api_key_env} not set")

    done = {
        (r.model, r.item, r.temperature)
        for r in read_records(job.output_path)
        if r.ok
    }
    tasks = [
        (item, t)
        for t in job.temperatures
        for item in job.items
        if (job.model, item, t) not in done
    ]
    if not tasks:
        return []

    appender = _Appender(job.output_path)
    results = []
    with ThreadPoolExecutor(max_workers=job.concurrency) as pool:
        futures = [
            pool.submit(_generate_one, job, api_key, item, t, sleep)
            for item, t in tasks
        ]
        for fut in futures:
            rec = fut.result()
            appender.append(rec)
            results.append(rec)
    return results


def plan_requests(job: GenerationJob) -> list[dict]:
    """Dry-run view: the request bodies run_job would send, in order."""
    job.validate()
    return [
        {
            "model": job.model,
            "messages": [{"role": "user",
                          "content": job.prompt_template.format(item=item)}],
            "temperature": t,
        }
        for t in job.temperatures
        for item in job.items
    ]


def corpus_from_records(
    records_path,
    out_dir,
    models=None,
    temperatures=None,
    max_temperature: float | None = None,
) -> CorpusManifest:
    """Extract matching record texts into a corpus directory + manifest.

    Successful records are grouped per (model, temperature) into one .txt
    file each, supporting the accumulated groupings (per family, or all
    models up to a temperature cap). Raises NoFilesMatched via scan_corpus
    when nothing survives the filter.
    """
    records = read_records(records_path)
    groups: dict[tuple[str, float], list[str]] = {}
    for rec in records:
        if not rec.ok:
            continue
        if models is not None and rec.model not in models:
            continue
        if temperatures is not None and rec.temperature not in temperatures:
            continue
        if max_temperature is not None and rec.temperature > max_temperature:
            continue
        groups.setdefault((rec.model, rec.temperature), []).append(rec.text)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for (model, t), texts in sorted(groups.items()):
        safe = "".join(ch if ch.isalnum() or ch in "._-" else "_" for ch in model)
        (out / f"{safe}_T{t}.txt").write_text(" ".join(texts), encoding="utf-8")
    return scan_corpus(out, partition="generated")
