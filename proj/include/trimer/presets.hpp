// presets.hpp: bundled run presets, one per figure panel.
//
// Every preset uses N = 30 and Omega = -1 (|Omega| = 1, tunneling negative for separated wells).
// Entries are plain "key = value" overrides applied to a RunConfig.
#pragma once

#include <array>
#include <string_view>

namespace trimer {

struct Preset {
    std::string_view id;
    std::string_view command;
    std::string_view description;
    std::string_view overrides;  // "key = value" lines
};

inline constexpr std::array<Preset, 24> kPresets{{
    {"fig1", "stability-map", "real twin fixed points over (chi, mu)",
     "n = 30\nomega = -1\nchi_min = -10\nchi_max = 10\nchi_steps = 201\nmu_min = -1\nmu_max = 1\nmu_steps = 201\n"},
    {"fig2", "stability-map", "stability of s2 and of the depleted-well states over (chi, mu)",
     "n = 30\nomega = -1\nchi_min = -10\nchi_max = 10\nchi_steps = 201\nmu_min = -1\nmu_max = 1\nmu_steps = 201\n"},
    {"fig3a", "sphere-portrait", "twin-surface orbits, chi = 1.5, mu = 0",
     "n = 30\nomega = -1\nchi = 1.5\nmu = 0\nt_end = 20\norbits = 12\n"},
    {"fig3b", "sphere-portrait", "twin-surface orbits, chi = 1.98, mu = 0",
     "n = 30\nomega = -1\nchi = 1.98\nmu = 0\nt_end = 20\norbits = 12\n"},
    {"fig3c", "sphere-portrait", "twin-surface orbits, chi = 3, mu = 0",
     "n = 30\nomega = -1\nchi = 3\nmu = 0\nt_end = 20\norbits = 12\n"},
    {"fig4a", "evolve", "population imbalance from |0,0,N>, chi = 4, mu = chi/100",
     "n = 30\nomega = -1\nchi = 4\nmu = 0.04\nmode = both\nw1_re = 0\nw1_im = 0\nw2_re = 0\nw2_im = 0\nt_end = 50\n"},
    {"fig4b", "evolve", "population imbalance from |0,0,N>, chi = 4, mu = chi/10",
     "n = 30\nomega = -1\nchi = 4\nmu = 0.4\nmode = both\nw1_re = 0\nw1_im = 0\nw2_re = 0\nw2_im = 0\nt_end = 50\n"},
    {"fig5a", "evolve", "purity and b3 occupation from |0,0,N>, chi = 4, mu = chi/100",
     "n = 30\nomega = -1\nchi = 4\nmu = 0.04\nmode = quantum\nw1_re = 0\nw1_im = 0\nw2_re = 0\nw2_im = 0\nt_end = 50\n"},
    {"fig5b", "evolve", "purity and b3 occupation from |0,0,N>, chi = 4, mu = chi/10",
     "n = 30\nomega = -1\nchi = 4\nmu = 0.4\nmode = quantum\nw1_re = 0\nw1_im = 0\nw2_re = 0\nw2_im = 0\nt_end = 50\n"},
    {"fig6a", "poincare", "section phi2 = 0 on the depleted-well shell, chi = 5, mu = chi/100",
     "n = 30\nomega = -1\nchi = 5\nmu = 0.05\nshell = sdw\nt_end = 200\n"
     "section.chart = canonical\nsection.condition = phi2\nsection.value = 0\nsection.direction = both\n"
     "section.axis1 = K1\nsection.axis2 = phi1\n"
     "seed.frozen = phi2\nseed.frozen_value = 0\nseed.grid1 = K1\nseed.grid1_lo = 1\nseed.grid1_hi = 29\nseed.grid1_n = 15\n"
     "seed.grid2 = phi1\nseed.grid2_lo = 2.1415926535897931\nseed.grid2_hi = 4.1415926535897931\nseed.grid2_n = 3\n"
     "seed.solve = K2\nseed.solve_lo = 0\nseed.solve_hi = 30\n"},
    {"fig6b", "poincare", "section phi2 = 0 on the depleted-well shell, chi = -5, mu = chi/100",
     "n = 30\nomega = -1\nchi = -5\nmu = -0.05\nshell = sdw\nt_end = 200\n"
     "section.chart = canonical\nsection.condition = phi2\nsection.value = 0\nsection.direction = both\n"
     "section.axis1 = K1\nsection.axis2 = phi1\n"
     "seed.frozen = phi2\nseed.frozen_value = 0\nseed.grid1 = K1\nseed.grid1_lo = 1\nseed.grid1_hi = 29\nseed.grid1_n = 15\n"
     "seed.grid2 = phi1\nseed.grid2_lo = 2.1415926535897931\nseed.grid2_hi = 4.1415926535897931\nseed.grid2_n = 3\n"
     "seed.solve = K2\nseed.solve_lo = 0\nseed.solve_hi = 30\n"},
    {"fig7a", "evolve", "classical populations near a depleted-well state, chi = 5, mu = chi/100",
     "n = 30\nomega = -1\nchi = 5\nmu = 0.05\nmode = classical\nw1_re = -0.95\nw1_im = 0\nw2_re = 0.1\nw2_im = 0\nt_end = 50\n"},
    {"fig7b", "evolve", "classical populations near a depleted-well state, chi = -5, mu = chi/100",
     "n = 30\nomega = -1\nchi = -5\nmu = -0.05\nmode = classical\nw1_re = -0.95\nw1_im = 0\nw2_re = 0.1\nw2_im = 0\nt_end = 50\n"},
    {"fig8a", "evolve", "quantum populations from the coherent state of fig7a",
     "n = 30\nomega = -1\nchi = 5\nmu = 0.05\nmode = quantum\nw1_re = -0.95\nw1_im = 0\nw2_re = 0.1\nw2_im = 0\nt_end = 50\n"},
    {"fig8b", "evolve", "quantum populations from the coherent state of fig7b",
     "n = 30\nomega = -1\nchi = -5\nmu = -0.05\nmode = quantum\nw1_re = -0.95\nw1_im = 0\nw2_re = 0.1\nw2_im = 0\nt_end = 50\n"},
    {"fig9a", "poincare", "section p2 = -sqrt(N/2) on the vortex shell, chi = -1, mu = chi/100",
     "n = 30\nomega = -1\nchi = -1\nmu = -0.01\nshell = vortex\nt_end = 200\n"
     "section.chart = cartesian\nsection.condition = p2\nsection.value = -3.872983346207417\nsection.direction = both\n"
     "section.axis1 = q1\nsection.axis2 = p1\n"
     "seed.frozen = p2\nseed.frozen_value = -3.872983346207417\nseed.grid1 = q1\nseed.grid1_lo = -4\nseed.grid1_hi = -0.5\nseed.grid1_n = 5\n"
     "seed.grid2 = p1\nseed.grid2_lo = 2\nseed.grid2_hi = 5.5\nseed.grid2_n = 5\n"
     "seed.solve = q2\nseed.solve_lo = -7.7\nseed.solve_hi = 7.7\n"},
    {"fig9b", "poincare", "section p2 = -sqrt(N/2) on the vortex shell, chi = -5, mu = chi/100",
     "n = 30\nomega = -1\nchi = -5\nmu = -0.05\nshell = vortex\nt_end = 200\n"
     "section.chart = cartesian\nsection.condition = p2\nsection.value = -3.872983346207417\nsection.direction = both\n"
     "section.axis1 = q1\nsection.axis2 = p1\n"
     "seed.frozen = p2\nseed.frozen_value = -3.872983346207417\nseed.grid1 = q1\nseed.grid1_lo = -4\nseed.grid1_hi = -0.5\nseed.grid1_n = 5\n"
     "seed.grid2 = p1\nseed.grid2_lo = 2\nseed.grid2_hi = 5.5\nseed.grid2_n = 5\n"
     "seed.solve = q2\nseed.solve_lo = -7.7\nseed.solve_hi = 7.7\n"},
    {"fig10a", "evolve", "angular momentum near the vortex, chi = -1, mu = chi/100 (regular)",
     "n = 30\nomega = -1\nchi = -1\nmu = -0.01\nmode = both\nw1_re = -0.55\nw1_im = 0.9526279441628825\nw2_re = -0.5\nw2_im = -0.8660254037844386\nt_end = 50\n"},
    {"fig10b", "evolve", "angular momentum near the vortex, chi = -5, mu = chi/100 (chaotic)",
     "n = 30\nomega = -1\nchi = -5\nmu = -0.05\nmode = both\nw1_re = -0.55\nw1_im = 0.9526279441628825\nw2_re = -0.5\nw2_im = -0.8660254037844386\nt_end = 50\n"},
    {"fig10-regular", "evolve", "alias of fig10a",
     "n = 30\nomega = -1\nchi = -1\nmu = -0.01\nmode = both\nw1_re = -0.55\nw1_im = 0.9526279441628825\nw2_re = -0.5\nw2_im = -0.8660254037844386\nt_end = 50\n"},
    {"fig10-chaotic", "evolve", "alias of fig10b",
     "n = 30\nomega = -1\nchi = -5\nmu = -0.05\nmode = both\nw1_re = -0.55\nw1_im = 0.9526279441628825\nw2_re = -0.5\nw2_im = -0.8660254037844386\nt_end = 50\n"},
    {"fig4", "evolve", "alias of fig4a",
     "n = 30\nomega = -1\nchi = 4\nmu = 0.04\nmode = both\nw1_re = 0\nw1_im = 0\nw2_re = 0\nw2_im = 0\nt_end = 50\n"},
    {"fig5", "evolve", "alias of fig5a",
     "n = 30\nomega = -1\nchi = 4\nmu = 0.04\nmode = quantum\nw1_re = 0\nw1_im = 0\nw2_re = 0\nw2_im = 0\nt_end = 50\n"},
    {"fig10", "evolve", "alias of fig10a",
     "n = 30\nomega = -1\nchi = -1\nmu = -0.01\nmode = both\nw1_re = -0.55\nw1_im = 0.9526279441628825\nw2_re = -0.5\nw2_im = -0.8660254037844386\nt_end = 50\n"},
}};

inline const Preset* find_preset(std::string_view id) {
    for (const auto& p : kPresets)
        if (p.id == id) return &p;
    return nullptr;
}

}  // namespace trimer
