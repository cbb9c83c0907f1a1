gains = [1.5, 1.0
noise = 1.0
n_users = len(gains)

direction = "min"


def total_power(powers):
    return sum(powers)

p_min = 0.0
p_max = 1.0
if "powers" in globals():
    powers = [min(max(p, p_min), p_max) for p in powers]
else:
    powers = [p_min if globals().get("direction", "min") == "min" else p_max] * n_users
print(f"powers={[float(p) for p in powers]}")
