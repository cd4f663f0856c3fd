#pragma once

#include "xducer/layering.hpp"
#include "xducer/sst2mt.hpp"

namespace xducer {

struct MarbleMinResult {
    bool exponential = false;
    GrowthReport report;
    int k = 0;                 // least number of marbles
    SST layered;               // k-layered SST for the same function
    MarbleTransducer machine;  // at most k marbles; empty when exponential
};

MarbleMinResult minimize_marbles(const MarbleTransducer& t, const StageHook& hook = {});

}  // namespace xducer
