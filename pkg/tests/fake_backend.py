"""Test double for the subprocess bridge: behavior selected by argv."""
import json
import sys


def linear_response(req, n=4):
    dt = req["dt"]
    params = req["parameters"]
    speed = params.get("EgoSpeed", 5.0)
    ego = [[k * dt, speed * k * dt, 0.0, 0.0, speed] for k in range(n)]
    ped = [[k * dt, 30.0, 2.0, 0.0, 0.0] for k in range(n)]
    return {
        "id": req["id"],
        "dt": dt,
        "actors": {"ego": ego, "pedestrian": ped},
        "collision": False,
        "collision_time": None,
        "metadata": {"simulator": "fake", "seed": str(req["seed"])},
    }


def main():
    mode = sys.argv[1] if len(sys.argv) > 1 else "ok"
    if mode == "exit":
        return
    buffered = []
    for line in sys.stdin:
        req = json.loads(line)
        if mode == "ok":
            print(json.dumps(linear_response(req)), flush=True)
        elif mode == "unequal":
            resp = linear_response(req)
            resp["actors"]["pedestrian"] = resp["actors"]["pedestrian"][:-1]
            print(json.dumps(resp), flush=True)
        elif mode == "malformed":
            print("this is not json", flush=True)
        elif mode == "preecho":
            # answer a not-yet-made request first, then the real one
            upcoming = dict(req, id=req["id"] + 1)
            print(json.dumps(linear_response(upcoming)), flush=True)
            print(json.dumps(linear_response(req)), flush=True)
        elif mode == "silent":
            continue
        elif mode == "die-after-read":
            return


if __name__ == "__main__":
    main()
