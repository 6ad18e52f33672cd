#pragma once
#include <vector>

#include "mtlab/wavepacket.hpp"

namespace mtlab {

// Per-box generator profile: Packet uses Phi_hat (support theta), Narrow uses
// Phi_hat(2 .) (support theta/4) whose inverse transform is 2^{-n} Phi(y/2).
enum class Profile { Packet, Narrow };

struct SleeveComponent {
    int theta = 0;
    Profile profile = Profile::Packet;
    std::vector<IVec> k;
    std::vector<cplx> b;
};

// f = sum_theta |det T| e^{2 pi i c.x} sum_k b_k rho_check(T x - k)
class SleeveField {
public:
    explicit SleeveField(BoxSet boxes) : boxes_(std::move(boxes)) {}
    static SleeveField from_packets(BoxSet boxes, const std::vector<WavePacketCoeff>& coeffs);

    const BoxSet& boxes() const { return boxes_; }
    int n() const { return boxes_.n(); }
    double R() const { return boxes_.R(); }
    const std::vector<SleeveComponent>& components() const { return comps_; }
    SleeveComponent& add(int theta, Profile p);
    void add_generator(int theta, Profile p, const IVec& k, cplx b);
    bool empty() const;
    SleeveField scaled(cplx s) const;

    cplx eval(const Vec& x) const;
    cplx eval_component(std::size_t c, const Vec& x) const;
    std::vector<cplx> eval_many(const std::vector<Vec>& xs) const;
    Field sample(const Grid& g) const;
    // single component on its own adapted grid (separable)
    Field sample_component(std::size_t c, const Grid& g) const;

    // exact L2 norm squared via the frequency side
    double norm2() const;
    // wave packet coefficients a_{m, theta}; narrow components are expanded
    std::vector<WavePacketCoeff> packets(double rel_tol = 1e-13, int radius = 80) const;

private:
    BoxSet boxes_;
    std::vector<SleeveComponent> comps_;
};

double rho_check(Profile p, const Vec& y);
double rho_hat(Profile p, const Vec& eta);

}  // namespace mtlab
