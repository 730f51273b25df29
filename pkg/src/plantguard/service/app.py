"""HTTP/JSON replay and feedback service.

Serves one replay session into the detection engine, publishes per-interval
telemetry on a monotonically numbered event stream, and accepts technician
verdicts that drive the adaptation path. The operator console is a pure
client of these endpoints.
"""

from __future__ import annotations

import json
import os
import threading
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel, Field

from plantguard.adapt import TuningConfig
from plantguard.data.noise import NoiseConfig, add_gaussian_noise
from plantguard.data.records import load_csv
from plantguard.errors import AdaptationError, PipelineOrderError
from plantguard.evaluation.experiment import TrainedSystem
from plantguard.evaluation.metrics import false_alarm_episodes, interventions_rate, point_metrics
from plantguard.service.session import EventBuffer, ReplaySession, SessionError


class SessionCommand(BaseModel):
    action: str = Field(pattern="^(start|pause|resume|seek|speed)$")
    speed: float | None = None
    to: int | None = None


class FeedbackFlags(BaseModel):
    actuators: bool = False
    sections: list[int] = Field(default_factory=list)


class FeedbackRequest(BaseModel):
    verdict: str = Field(pattern="^(true-anomaly|false-alarm)$")
    fa: FeedbackFlags | None = None


def _interval_event_payload(result, trace_alarm_ids):
    return {
        "t_start": int(result.t_start),
        "t_end": int(result.t_end),
        "ticks": [int(t) for t in result.ticks],
        "mse": [[float(v) for v in row] for row in result.mse.T],
        "thresholds": [float(v) for v in result.thresholds],
        "labels": [int(v) for v in result.labels_raw],
        "alarm_ids": trace_alarm_ids,
        "model_version": int(result.model_version),
    }


def create_app(system: TrainedSystem, records, labels=None,
               alarm_log_path: str | os.PathLike | None = None,
               detector_overrides: dict | None = None) -> FastAPI:
    app = FastAPI(title="plantguard service")
    events = EventBuffer()
    engine = system.engine(**(detector_overrides or {}))
    log_path = Path(alarm_log_path) if alarm_log_path else None
    log_lock = threading.Lock()

    def log_alarm(alarm) -> None:
        if log_path is None:
            return
        with log_lock, open(log_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(alarm.to_dict()) + "\n")

    def on_interval(result) -> None:
        ids = []
        for alarm in result.new_alarms:
            log_alarm(alarm)
            ids.append(alarm.id)
            events.append("alarm", {"alarm": alarm.to_dict()})
        events.append("interval", _interval_event_payload(result, ids))

    session = ReplaySession(engine, records, events, on_interval=on_interval)
    app.state.engine = engine
    app.state.session = session
    app.state.events = events
    app.state.labels = labels

    @app.get("/status")
    def status():
        snap = session.snapshot()
        snap.update({
            "model_version": engine.model_version,
            "warmup": engine.cfg.warmup,
            "sections": engine.n_sections,
            "alarms": len(engine.alarms),
            "last_seq": events.last_seq,
        })
        return snap

    @app.post("/session")
    def session_command(cmd: SessionCommand):
        try:
            if cmd.action == "start":
                session.start(speed=cmd.speed or 0.0)
            elif cmd.action == "pause":
                session.pause()
            elif cmd.action == "resume":
                session.resume()
            elif cmd.action == "seek":
                if cmd.to is None:
                    raise HTTPException(status_code=422, detail="seek needs 'to'")
                session.seek(cmd.to)
            elif cmd.action == "speed":
                session.set_speed(cmd.speed or 0.0)
        except SessionError as exc:
            raise HTTPException(status_code=exc.status_code, detail=str(exc)) from None
        return session.snapshot()

    @app.get("/events")
    def get_events(request: Request, since: int = 0, wait: float = 0.0, limit: int = 1000):
        if "text/event-stream" in request.headers.get("accept", ""):
            def stream():
                cursor = since
                while True:
                    batch = events.wait_for(cursor, timeout=15.0)
                    if not batch and session.snapshot()["state"] == "finished":
                        yield "event: end\ndata: {}\n\n"
                        return
                    for event in batch:
                        cursor = max(cursor, event["seq"])
                        yield f"data: {json.dumps(event)}\n\n"
            return StreamingResponse(stream(), media_type="text/event-stream")
        batch = events.wait_for(since, timeout=min(wait, 30.0)) if wait else events.since(since, limit)
        next_seq = max([since] + [e["seq"] for e in batch])
        return {"events": batch, "next": next_seq}

    @app.get("/alarms")
    def alarms(status_filter: str | None = None):
        out = [a.to_dict() for a in engine.alarms]
        if status_filter:
            out = [a for a in out if a["status"] == status_filter]
        return {"alarms": out}

    @app.post("/alarms/{alarm_id}/feedback")
    def feedback(alarm_id: int, req: FeedbackRequest):
        with session.lock:
            alarm = engine.find_alarm(alarm_id)
            if alarm is None:
                raise HTTPException(status_code=404, detail=f"no alarm {alarm_id}")
            if alarm.status != "open":
                raise HTTPException(status_code=409, detail=f"alarm already {alarm.status}")
            if req.verdict == "true-anomaly":
                engine.mark_true_anomaly(alarm_id)
                return {"alarm_id": alarm_id, "verdict": req.verdict,
                        "adapted": False, "model_version": engine.model_version}
            flags = req.fa or FeedbackFlags()
            if not flags.actuators and not flags.sections:
                engine.dismiss_alarm(alarm_id)
                return {"alarm_id": alarm_id, "verdict": req.verdict,
                        "adapted": False, "model_version": engine.model_version}
            bad = [g for g in flags.sections if not 0 <= g < engine.n_sections]
            if bad:
                raise HTTPException(status_code=422, detail=f"unknown sections {bad}")
            try:
                report = engine.apply_feedback(
                    alarm_id,
                    fa_actuator=flags.actuators,
                    fa_sections=flags.sections,
                    tuning=TuningConfig(epochs=system.profile.tuning_epochs,
                                        learning_rate=system.profile.learning_rate),
                )
            except AdaptationError as exc:
                raise HTTPException(status_code=500, detail=str(exc)) from None
            except PipelineOrderError as exc:
                raise HTTPException(status_code=409, detail=str(exc)) from None
            events.append("adaptation", {"report": report.to_dict(),
                                         "model_version": engine.model_version})
            return {"alarm_id": alarm_id, "verdict": req.verdict, "adapted": True,
                    "model_version": engine.model_version, "report": report.to_dict()}

    @app.get("/model/version")
    def model_version():
        return {"version": engine.model_version}

    @app.get("/metrics")
    def metrics():
        trace = engine.trace()
        out = {
            "points_seen": int(trace.t.size),
            "alarm_points": int(trace.reported.sum()),
            "alarm_episodes": len(engine.alarms),
        }
        if app.state.labels is not None and trace.t.size:
            labels = np.asarray(app.state.labels, dtype=bool)[trace.t]
            pm = point_metrics(labels, trace.reported)
            fa = false_alarm_episodes(trace.reported, labels)
            duration = int(trace.t[-1] - trace.t[0] + 1)
            out.update(pm.to_dict())
            out["false_alarm_episodes"] = fa
            out["interventions_per_hour"] = interventions_rate(fa, duration)
        return out

    @app.exception_handler(SessionError)
    def session_error_handler(_, exc: SessionError):
        return JSONResponse(status_code=exc.status_code, content={"detail": str(exc)})

    return app


def app_from_config(config_path: str | os.PathLike) -> FastAPI:
    """Builds the app from a JSON config: model dir, dataset csv, options."""
    with open(config_path, encoding="utf-8") as fh:
        cfg = json.load(fh)
    system = TrainedSystem.load(cfg["model_dir"])
    records = load_csv(cfg["dataset"], system.profile)
    if cfg.get("noise_sigma"):
        records = add_gaussian_noise(
            records, NoiseConfig(sigma=float(cfg["noise_sigma"]), seed=int(cfg.get("seed", 0)))
        )
    return create_app(
        system,
        records,
        labels=records.labels,
        alarm_log_path=cfg.get("alarm_log"),
        detector_overrides=cfg.get("detector", {}),
    )
