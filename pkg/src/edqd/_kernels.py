"""Numba kernels for the per-step hot path.

These operate on flat float64/int64 arrays owned by the World. Candidate
pruning (only objects within sensing reach are ray-tested) is what makes
desk-scale experiment batteries run in minutes instead of hours; the
kernels implement exactly the sensing/movement semantics documented on
World.step and World.sense.
"""

import math

from numba import njit


@njit(cache=True)
def kernel_sense(
    pos,            # (N, 2) robot positions
    heading,        # (N,)
    sense_idx,      # (A,) ids to sense, ascending
    tok_pos,        # (T, 2)
    tok_colour,     # (T,) int8: 0 red, 1 blue
    robot_r,
    token_r,
    sensor_range,
    arena_r,
    ray_angles,     # (12,) body-relative, radians
    ground_rgb,     # (3,)
    out,            # (A, 63) output frames
    near_buf,       # (N + T,) int64 scratch
):
    n_rob = pos.shape[0]
    n_tok = tok_pos.shape[0]
    n_ray = ray_angles.shape[0]
    reach_rob = sensor_range + 2.0 * robot_r
    reach_tok = sensor_range + robot_r + token_r
    wall_reach = arena_r - sensor_range - robot_r
    for a in range(sense_idx.shape[0]):
        i = sense_idx[a]
        px = pos[i, 0]
        py = pos[i, 1]
        h = heading[i]
        out[a, 0] = ground_rgb[0]
        out[a, 1] = ground_rgb[1]
        out[a, 2] = ground_rgb[2]
        # Prune to objects whose surface a ray from this robot could reach.
        nn = 0
        for j in range(n_rob):
            if j == i:
                continue
            dx = pos[j, 0] - px
            dy = pos[j, 1] - py
            if dx * dx + dy * dy <= reach_rob * reach_rob:
                near_buf[nn] = j
                nn += 1
        nt = 0
        for k in range(n_tok):
            dx = tok_pos[k, 0] - px
            dy = tok_pos[k, 1] - py
            if dx * dx + dy * dy <= reach_tok * reach_tok:
                near_buf[nn + nt] = k
                nt += 1
        wall_near = wall_reach <= 0.0 or px * px + py * py >= wall_reach * wall_reach
        for r in range(n_ray):
            ang = h + ray_angles[r]
            ux = math.cos(ang)
            uy = math.sin(ang)
            # Ray origin on the robot perimeter.
            ox = px + ux * robot_r
            oy = py + uy * robot_r
            best_t = sensor_range
            best_cls = -1  # 0 robot, 1 wall, 2 red token, 3 blue token
            if wall_near:
                b = ox * ux + oy * uy
                c = ox * ox + oy * oy - arena_r * arena_r
                disc = b * b - c
                if disc > 0.0:
                    t = -b + math.sqrt(disc)
                    if 0.0 < t < best_t:
                        best_t = t
                        best_cls = 1
            for jj in range(nn):
                j = near_buf[jj]
                dx = pos[j, 0] - ox
                dy = pos[j, 1] - oy
                proj = dx * ux + dy * uy
                if proj <= 0.0 or proj - robot_r > best_t:
                    continue
                perp2 = dx * dx + dy * dy - proj * proj
                rr = robot_r * robot_r
                if perp2 < rr:
                    t = proj - math.sqrt(rr - perp2)
                    if 0.0 < t < best_t:
                        best_t = t
                        best_cls = 0
            for kk in range(nt):
                k = near_buf[nn + kk]
                dx = tok_pos[k, 0] - ox
                dy = tok_pos[k, 1] - oy
                proj = dx * ux + dy * uy
                if proj <= 0.0 or proj - token_r > best_t:
                    continue
                perp2 = dx * dx + dy * dy - proj * proj
                rr = token_r * token_r
                if perp2 < rr:
                    t = proj - math.sqrt(rr - perp2)
                    if 0.0 < t < best_t:
                        best_t = t
                        best_cls = 2 if tok_colour[k] == 0 else 3
            base = 3 + 5 * r
            out[a, base + 0] = best_t / sensor_range
            out[a, base + 1] = 1.0 if best_cls == 0 else 0.0
            out[a, base + 2] = 1.0 if best_cls == 1 else 0.0
            out[a, base + 3] = 1.0 if best_cls == 2 else 0.0
            out[a, base + 4] = 1.0 if best_cls == 3 else 0.0


@njit(cache=True)
def kernel_move(
    pos,            # (N, 2) updated in place
    heading,        # (N,) updated in place
    start_pos,      # (N, 2)
    max_disp,       # (N,) updated in place
    tokens_red,     # (N,) int64, updated in place
    tokens_blue,    # (N,) int64, updated in place
    active_idx,     # (A,) ascending
    motors,         # (A, 2) translation, rotation in [-1, 1]
    tok_pos,        # (T, 2)
    tok_colour,     # (T,) int8: 0 red, 1 blue
    tok_consumed,   # (T,) bool, updated in place
    arena_r,
    robot_r,
    token_r,
    max_speed,
    max_turn,
):
    n_rob = pos.shape[0]
    n_tok = tok_pos.shape[0]
    two_pi = 2.0 * math.pi
    wall_limit = arena_r - robot_r
    contact = robot_r + token_r
    n_consumed = 0
    for a in range(active_idx.shape[0]):
        i = active_idx[a]
        h = heading[i] + motors[a, 1] * max_turn
        h -= two_pi * math.floor(h / two_pi)
        heading[i] = h
        step_len = motors[a, 0] * max_speed
        nx = pos[i, 0] + step_len * math.cos(h)
        ny = pos[i, 1] + step_len * math.sin(h)
        # Cancel the move (heading change kept) on wall or robot overlap.
        ok = nx * nx + ny * ny < wall_limit * wall_limit
        if ok:
            for j in range(n_rob):
                if j == i:
                    continue
                dx = nx - pos[j, 0]
                dy = ny - pos[j, 1]
                if dx * dx + dy * dy < 4.0 * robot_r * robot_r:
                    ok = False
                    break
        if ok:
            pos[i, 0] = nx
            pos[i, 1] = ny
        px = pos[i, 0]
        py = pos[i, 1]
        dx = px - start_pos[i, 0]
        dy = py - start_pos[i, 1]
        d2 = dx * dx + dy * dy
        if d2 > max_disp[i] * max_disp[i]:
            max_disp[i] = math.sqrt(d2)
        for k in range(n_tok):
            if tok_consumed[k]:
                continue
            dx = tok_pos[k, 0] - px
            dy = tok_pos[k, 1] - py
            if dx * dx + dy * dy < contact * contact:
                tok_consumed[k] = True
                n_consumed += 1
                if tok_colour[k] == 0:
                    tokens_red[i] += 1
                else:
                    tokens_blue[i] += 1
    return n_consumed


@njit(cache=True)
def kernel_contacts(
    pos,             # (N, 2)
    active_idx,      # (A,) senders
    broadcast_range,
    pair_out,        # (A * (N - 1), 2) int64: (sender, receiver)
):
    n_rob = pos.shape[0]
    r2 = broadcast_range * broadcast_range
    n = 0
    for a in range(active_idx.shape[0]):
        s = active_idx[a]
        sx = pos[s, 0]
        sy = pos[s, 1]
        for j in range(n_rob):
            if j == s:
                continue
            dx = pos[j, 0] - sx
            dy = pos[j, 1] - sy
            if dx * dx + dy * dy <= r2:
                pair_out[n, 0] = s
                pair_out[n, 1] = j
                n += 1
    return n
