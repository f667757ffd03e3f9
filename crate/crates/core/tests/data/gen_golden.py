"""Writes golden.txt from hand-packed layouts, independent of the Rust codec."""

import ipaddress
import struct
from pathlib import Path


def pose(p, q):
    return struct.pack("<3d4d", *p, *q)


def setpoint(p, v, a, yaw):
    return struct.pack("<10d", *p, *v, *a, yaw)


def gripper(state, left, right):
    return struct.pack("<BHH", state, left, right)


def mission(verb, target):
    raw = target.encode("utf-8")
    return struct.pack("<BH", verb, len(raw)) + raw


def participant(pid, domain, name, endpoints):
    raw = name.encode("utf-8")
    out = struct.pack("<QBH", pid, domain, len(raw)) + raw + struct.pack("<H", len(endpoints))
    for topic_hash, direction, ip, port in endpoints:
        addr = ipaddress.ip_address(ip)
        out += struct.pack("<QBB", topic_hash, direction, addr.version) + addr.packed + struct.pack("<H", port)
    return out


ENTRIES = [
    ("Pose", pose((0, 0, 0), (1, 0, 0, 0))),
    ("Pose", pose((1.5, -2.25, 0.75), (0.5, 0.5, 0.5, 0.5))),
    ("Pose", pose((-0.125, 3.0, 1.0625), (0, 0, 0, 1))),
    ("Setpoint", setpoint((0, 0, 1), (0, 0, 0), (0, 0, 0), 0)),
    ("Setpoint", setpoint((-2, 0.5, 1.04), (1.25, 0, -0.5), (0.25, -0.125, 9.5), -1.5)),
    ("GripperCmd", gripper(0, 0, 0)),
    ("GripperCmd", gripper(1, 9000, 9000)),
    ("GripperCmd", gripper(1, 18000, 0)),
    ("MissionCmd", mission(0, "")),
    ("MissionCmd", mission(1, "bottle")),
    ("MissionCmd", mission(2, "styrofoam")),
    ("MissionCmd", mission(3, "")),
    ("MissionCmd", mission(4, "")),
    ("MissionCmd", mission(2, "tasse-é")),
    (
        "ParticipantInfo",
        participant(
            0x0123456789ABCDEF,
            7,
            "drone",
            [(0x1122334455667788, 0, "192.168.1.20", 7411), (0xFFEEDDCCBBAA0099, 1, "::1", 40000)],
        ),
    ),
    ("ParticipantInfo", participant(1, 0, "mocap", [])),
]

lines = ["# type_name hex; regenerate with gen_golden.py"]
lines += [f"{name} {data.hex()}" for name, data in ENTRIES]
Path(__file__).with_name("golden.txt").write_text("\n".join(lines) + "\n")
