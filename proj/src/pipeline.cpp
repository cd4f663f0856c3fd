#include "xducer/pipeline.hpp"

#include "xducer/mt2sst.hpp"

namespace xducer {

MarbleMinResult minimize_marbles(const MarbleTransducer& t, const StageHook& hook)
{
    auto sst = marble_to_sst(t);
    if (hook) hook("sst", sst);
    auto lr = to_k_layered(sst, hook);
    MarbleMinResult r;
    r.exponential = lr.exponential;
    r.report = lr.report;
    r.k = lr.k;
    if (lr.exponential) return r;
    r.layered = lr.machine;
    r.machine = layered_to_marble(r.layered, *r.layered.layers, LayerStrategy::Exact);
    if (hook) hook("marble", r.machine);
    return r;
}

}  // namespace xducer
