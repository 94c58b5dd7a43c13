#pragma once

// Small, fast configurations shared by the training, transfer and evaluation tests.

#include "crimexfer/synthgen.hpp"
#include "crimexfer/training.hpp"

#include <memory>

namespace fixtures {

using namespace crimexfer;

inline synth::FamilyParams small_family(int cities = 3) {
    synth::FamilyParams p;
    p.n_cities = cities;
    p.tracts = 12;
    p.months = 10;
    return p;
}

inline nn::ArchitectureDescriptor small_arch() {
    nn::ArchitectureDescriptor d;
    d.lookback_days = 2;
    d.conv_channels = {4};
    d.dense_hidden = {8};
    return d;
}

inline TrainConfig fast_train(int epochs = 3) {
    TrainConfig c;
    c.max_epochs = epochs;
    c.patience = 2;
    c.batch_size = 32;
    c.lr_grid = {3e-3, 1e-2};
    c.seed = 5;
    return c;
}

inline std::shared_ptr<const CityDataset> small_city(std::uint64_t seed, const std::string& name = "c") {
    return std::make_shared<const CityDataset>(synth::generate_city(small_family(), seed, name));
}

} // namespace fixtures
