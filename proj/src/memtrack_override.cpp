// Whole-process heap instrumentation by libc-symbol interposition.  Linking
// this translation unit into an executable makes every malloc/free (and thus
// every Eigen and STL allocation) update the qttgp::memtrack counters.  It is
// deliberately kept out of the core library so that embedding hosts — the
// python interpreter in particular — never get their allocator hijacked.

#include <malloc.h>

#include <cstddef>
#include <cstring>

#include "qttgp/memtrack.hpp"

extern "C" {
void* __libc_malloc(size_t);
void __libc_free(void*);
void* __libc_calloc(size_t, size_t);
void* __libc_realloc(void*, size_t);
void* __libc_memalign(size_t, size_t);
}

namespace {

struct HookInit {
  HookInit() { qttgp::memtrack::detail::hooked.store(true); }
} hook_init;

inline void note_alloc(void* p) {
  if (p) qttgp::memtrack::detail::on_alloc(malloc_usable_size(p));
}

}  // namespace

extern "C" {

void* malloc(size_t size) {
  void* p = __libc_malloc(size);
  note_alloc(p);
  return p;
}

void free(void* p) {
  if (!p) return;
  qttgp::memtrack::detail::on_free(malloc_usable_size(p));
  __libc_free(p);
}

void* calloc(size_t n, size_t size) {
  void* p = __libc_calloc(n, size);
  note_alloc(p);
  return p;
}

void* realloc(void* p, size_t size) {
  const size_t before = p ? malloc_usable_size(p) : 0;
  void* q = __libc_realloc(p, size);
  if (q) {
    qttgp::memtrack::detail::on_free(before);
    note_alloc(q);
  }
  return q;
}

void* memalign(size_t align, size_t size) {
  void* p = __libc_memalign(align, size);
  note_alloc(p);
  return p;
}

void* aligned_alloc(size_t align, size_t size) {
  void* p = __libc_memalign(align, size);
  note_alloc(p);
  return p;
}

int posix_memalign(void** out, size_t align, size_t size) {
  if (align < sizeof(void*) || (align & (align - 1)) != 0) return 22;  // EINVAL
  void* p = __libc_memalign(align, size);
  if (!p) return 12;  // ENOMEM
  note_alloc(p);
  *out = p;
  return 0;
}

}  // extern "C"
