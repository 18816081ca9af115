"""Drive the HTTP session service end to end.

Boots the service on a local port, creates a simulated-patient session and
plays practitioner for a handful of visits: draw the next marker reading,
look at the recommendation, sometimes override it, commit.  The same
endpoints back the browser console under frontend/.
"""

import threading
import time

import httpx
import uvicorn

from followup.service import create_app

PORT = 8901


def boot():
    app = create_app(data_dir="sessions")
    config = uvicorn.Config(app, host="127.0.0.1", port=PORT,
                            log_level="error")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    while not server.started:
        time.sleep(0.05)
    return server


def main():
    server = boot()
    base = f"http://127.0.0.1:{PORT}"
    with httpx.Client(base_url=base, timeout=120.0) as client:
        created = client.post("/sessions", json={
            "simulated": True, "seed": 5,
            "config": {"planner": {"n_search": 200, "k_root": 100,
                                   "precision": 0.1}},
        }).json()
        sid = created["id"]
        print(f"session {sid} created; entry observation {created['observation']}")

        for visit in range(8):
            view = client.post(f"/sessions/{sid}/observations",
                               json={"draw": True}).json()
            if view["status"] != "awaiting_decision":
                print(f"follow-up ended: {view['status']}")
                break
            rec = view["recommendation"]
            last = view["timeline"][-1]
            modes = [round(p, 2) for p in view["belief"]["modes"]]
            print(f"visit {visit}: t={last['t']:.0f} reading={last['y']:.2f} "
                  f"belief modes={modes} -> recommended {rec['label']}")
            if visit == 2:  # practitioner disagrees once
                body = {"treatment": "none", "delay": 15, "override": True}
                print("  overriding with none/15")
            else:
                body = {"treatment": rec["label"].split("/")[0],
                        "delay": rec["delay"]}
            ack = client.post(f"/sessions/{sid}/decisions", json=body).json()
            print(f"  committed; next visit at t={ack['next_visit_time']:.0f}")

        full = client.get(f"/sessions/{sid}").json()
        print(f"\nevent log holds {full['event_count']} events, "
              f"{full['overrides']} override(s); the session persists under "
              f"sessions/{sid}.jsonl and replays bit-identically")
    server.should_exit = True


if __name__ == "__main__":
    main()
