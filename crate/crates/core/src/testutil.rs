/// Smallest valid network: slack bus 1 feeding a 0.5 pu load at bus 2 over a
/// lossless x = 0.1 line.
pub const TWO_BUS: &str = r#"
base_mva = 100.0
bus = [
  { id = 1, kind = "slack", vm = 1.0, va = 0.0, v_min = 0.9, v_max = 1.1, gs = 0.0, bs = 0.0 },
  { id = 2, kind = "pq", vm = 1.0, va = 0.0, v_min = 0.9, v_max = 1.1, gs = 0.0, bs = 0.0 },
]
branch = [
  { id = 1, from_bus = 1, to_bus = 2, r = 0.0, x = 0.1, b = 0.0, tap = 1.0, shift = 0.0, rate_a = 0.0, status = "closed" },
]
generator = [
  { id = 1, bus = 1, pg = 0.0, qg = 0.0, p_min = 0.0, p_max = 2.0, q_min = -1.0, q_max = 1.0, v_set = 1.0, status = "on", cost_c2 = 0.0, cost_c1 = 1.0, cost_c0 = 0.0 },
]
load = [
  { id = 1, bus = 2, pd = 0.5, qd = 0.0, group = 0, style = "constant" },
]
"#;
