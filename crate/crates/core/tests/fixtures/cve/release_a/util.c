#include <string.h>
#include "stat.h"

/* Copy a device name into a fixed buffer. */
void copy_name(char *dst, const char *src)
{
	strcpy(dst, src);
}
