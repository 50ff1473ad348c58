#pragma once

#include <array>
#include <vector>

#include "lgenet/cloud.hpp"

namespace lgenet {

// Class ids emitted by the synthetic scene generator.
enum SynthClass : int32_t {
    kGround = 0,
    kBuilding = 1,
    kTree = 2,
    kWire = 3,
};

inline const std::vector<std::string> kSynthClassNames = {"ground", "building", "tree",
                                                          "wire"};

// Generating primitives, kept so tests can verify that every point lies on
// the surface that labeled it.
struct SynthSceneInfo {
    // ground: z = a1*sin(wx*x)*cos(wy*y) + a2*sin(wy2*y + phase)
    double ground_a1 = 0, ground_a2 = 0;
    double ground_wx = 0, ground_wy = 0, ground_wy2 = 0, ground_phase = 0;
    struct Building {
        double cx, cy, w, d;   // axis-aligned footprint
        double base_z, height; // eave height above base
        bool gabled;
        double ridge_rise;     // extra rise at the ridge (along x axis of footprint)
    };
    std::vector<Building> buildings;
    struct Wire {
        std::array<double, 3> a, b;  // endpoints
        double sag;
    };
    std::vector<Wire> wires;
    struct Tree {
        double cx, cy, cz;  // canopy center
        double rx, ry, rz;
    };
    std::vector<Tree> trees;
    double surface_noise = 0.0;  // jitter applied to on-surface samples

    double ground_height(double x, double y) const;
    double roof_height(const Building& b, double x, double y) const;
};

// Deterministic labeled urban-like tile on [0, extent]^2: undulating ground,
// flat/gabled roofs with facade strips, ellipsoidal canopies and catenary
// wires above. density is the approximate ground sampling rate in points/m^2.
PointCloud synth_scene(uint64_t seed, double extent, double density,
                       SynthSceneInfo* info = nullptr);

}  // namespace lgenet
