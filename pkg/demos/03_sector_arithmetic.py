"""Shares and national normalisation from published level rows.

Given level rows of a sector table, the shares are row / total and a sector
total is put on the all-sector scale by multiplying with n_sector / N.
"""

from thsynergy.decomposition import level_increments, sector_normalize, share_of_total

N_ALL = 593_987
columns = {
    "all sectors": ((-1670.9, -704.2, -315.5), -2690.7, N_ALL),
    "high tech": ((879.3, -386.4, -570.4), -77.4, 2_564),
    "medium tech": ((555.6, -986.6, -716.9), -1147.3, 15_860),
    "KIS": ((-1024.8, -550.6, -293.9), -1869.3, 76_078),
}

for name, (rows, total, n) in columns.items():
    mixed = any(r > 0 for r in rows) and any(r < 0 for r in rows)
    shares = "mixed signs" if mixed else " / ".join(f"{share_of_total(r, total):.1f}%" for r in rows)
    norm = sector_normalize(total, n, N_ALL)
    print(f"{name:12s} rows sum {sum(rows):8.1f} vs total {total:8.1f}   {shares:24s}"
          f" normalized {norm:8.1f} ({share_of_total(norm, -2690.7):.2f}%)")

# the rows are increments of weighted in-group sums, so they can be rebuilt
# from the sums at each level
print("rows from in-group sums:", [round(r, 1) for r in level_increments([-1670.9, -2375.1], -2690.7)])
