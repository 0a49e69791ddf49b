#include "divlab/errors.hpp"

namespace divlab {

void throw_validation(const std::string& what) { throw ValidationError(what); }
void throw_domain(const std::string& what) { throw DomainError(what); }
void throw_resource(const std::string& what) { throw ResourceError(what); }

}  // namespace divlab
