"""Wire protocol anatomy: framing, CRC protection, freshness filtering."""

from viewvr.geom import Quat, Vec3
from viewvr.proto import (
    ArmTarget,
    BadCrc,
    ChannelState,
    HeadTarget,
    accept_fresh,
    decode,
    encode,
)

data = encode(HeadTarget(0.1, -0.2), seq=7, timestamp_us=123_456)
print(f"HeadTarget datagram ({len(data)} bytes):")
print("  magic    ", data[:4])
print("  msg_type ", hex(data[4]))
print("  flags    ", data[5])
print("  seq      ", int.from_bytes(data[6:10], "little"))
print("  t_us     ", int.from_bytes(data[10:18], "little"))
print("  payload  ", data[18:-4].hex())
print("  crc32    ", data[-4:].hex())

print("\ndecode:", decode(data).msg)

corrupted = bytearray(data)
corrupted[20] ^= 0x01
try:
    decode(bytes(corrupted))
except BadCrc as exc:
    print("single flipped bit ->", type(exc).__name__, "-", exc)

print("\nfreshness filter on a reordered burst (seqs 5, 3, 6, 6, 4, 7):")
channel = ChannelState()
for seq in (5, 3, 6, 6, 4, 7):
    verdict = "accept" if accept_fresh(channel, HeadTarget.TYPE, seq) else "stale "
    print(f"  seq {seq}: {verdict}")

arm = encode(ArmTarget(Vec3(0.3, -0.1, 0.25), Quat(1, 0, 0, 0)), seq=0, timestamp_us=0)
print(f"\nArmTarget datagram is {len(arm)} bytes (56-byte payload)")
